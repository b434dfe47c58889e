#include <string>
#include <vector>

#include "greenladder/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return greenladder::cli::run(args);
}
