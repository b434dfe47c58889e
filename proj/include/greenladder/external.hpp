#pragma once

#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/file.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include <json.hpp>

#include "greenladder/core_model.hpp"
#include "greenladder/error.hpp"
#include "greenladder/measurement.hpp"

extern char** environ;

namespace greenladder {

/// Encoder/decoder invocation for real measurements.
///
/// Templates are run through /bin/sh -c after placeholder substitution:
///   {input} {output} {width} {height} {qp} {sidecar}
/// For the encode step {input} is the source video and {output} the bitstream;
/// for the decode step {input} is that bitstream and {output} the decoded file.
/// The commands report quality (and optionally energy) through the sidecar:
///   {"enc_time_s":..?, "dec_time_s":..?, "enc_energy_wh":..?, "dec_energy_wh":..?,
///    "bitrate_kbps":.., "psnr_db":.., "vmaf":..}
/// Wall-clock times are used unless the sidecar provides its own.
struct ExternalCommand {
    std::string encode_template;
    std::string decode_template;
    std::filesystem::path work_dir = std::filesystem::temp_directory_path();
    std::chrono::milliseconds timeout{std::chrono::hours(2)};
    PowerModel enc_power{100.0, 0.0};
    PowerModel dec_power{100.0, 0.0};
    /// Host-wide lock file serializing timed runs; empty disables the file lock.
    std::filesystem::path lock_file = std::filesystem::temp_directory_path() / "greenladder.measure.lock";
};

/// Held for the duration of one timed measurement. Wall-clock time is the
/// energy proxy, so concurrent runs on one host would corrupt each other.
class MeasurementToken {
public:
    explicit MeasurementToken(const std::filesystem::path& lock_file) : guard_(process_mutex()) {
        if (lock_file.empty()) return;
        fd_ = ::open(lock_file.c_str(), O_RDWR | O_CREAT, 0644);
        if (fd_ < 0) throw Error(ErrorCode::IoFailure, "cannot open lock file " + lock_file.string());
        if (::flock(fd_, LOCK_EX) != 0) {
            ::close(fd_);
            throw Error(ErrorCode::IoFailure, "cannot lock " + lock_file.string());
        }
    }
    ~MeasurementToken() {
        if (fd_ >= 0) {
            ::flock(fd_, LOCK_UN);
            ::close(fd_);
        }
    }
    MeasurementToken(const MeasurementToken&) = delete;
    MeasurementToken& operator=(const MeasurementToken&) = delete;

private:
    static std::mutex& process_mutex() {
        static std::mutex m;
        return m;
    }
    std::unique_lock<std::mutex> guard_;
    int fd_ = -1;
};

namespace detail {

inline std::string substitute(std::string text, std::string_view key, const std::string& value) {
    const std::string token = "{" + std::string(key) + "}";
    for (auto pos = text.find(token); pos != std::string::npos; pos = text.find(token, pos + value.size())) {
        text.replace(pos, token.size(), value);
    }
    return text;
}

inline std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += "'\\''";
        else out += c;
    }
    return out + "'";
}

/// Runs `command` via /bin/sh and returns elapsed wall-clock seconds.
inline double run_timed(const std::string& command, std::chrono::milliseconds timeout) {
    const char* argv[] = {"/bin/sh", "-c", command.c_str(), nullptr};
    pid_t pid = 0;
    const auto start = std::chrono::steady_clock::now();
    if (posix_spawn(&pid, "/bin/sh", nullptr, nullptr, const_cast<char**>(argv), environ) != 0) {
        throw Error(ErrorCode::CommandFailed, "spawn failed: " + command);
    }
    int status = 0;
    while (true) {
        const pid_t r = ::waitpid(pid, &status, WNOHANG);
        if (r == pid) break;
        if (r < 0) throw Error(ErrorCode::CommandFailed, "waitpid failed: " + command);
        if (std::chrono::steady_clock::now() - start > timeout) {
            ::kill(pid, SIGKILL);
            ::waitpid(pid, &status, 0);
            throw Error(ErrorCode::Timeout, command);
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        const int code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
        throw Error(ErrorCode::CommandFailed, "exit code " + std::to_string(code) + ": " + command);
    }
    return elapsed;
}

inline std::optional<double> sidecar_number(const nlohmann::json& doc, const char* field, bool required) {
    auto it = doc.find(field);
    if (it == doc.end() || it->is_null()) {
        if (required) throw Error(ErrorCode::ParseFailure, std::string("sidecar missing field '") + field + "'");
        return std::nullopt;
    }
    if (!it->is_number()) throw Error(ErrorCode::ParseFailure, std::string("sidecar field '") + field + "' is not a number");
    return it->get<double>();
}

} // namespace detail

/// Encodes then decodes one representation with the configured commands.
inline MeasurementRecord external_measure(const ExternalCommand& cmd, const std::filesystem::path& video_path,
                                          const Representation& rep) {
    for (const char* key : {"{input}", "{width}", "{height}", "{qp}", "{output}"}) {
        if (cmd.encode_template.find(key) == std::string::npos) {
            throw Error(ErrorCode::InvalidArgument, std::string("encode template lacks placeholder ") + key);
        }
    }

    const std::string stem = video_path.stem().string() + "_" + std::to_string(rep.height()) + "p_qp"
                           + std::to_string(rep.qp);
    const auto bitstream = cmd.work_dir / (stem + ".bit");
    const auto decoded = cmd.work_dir / (stem + ".yuv");
    const auto sidecar = cmd.work_dir / (stem + ".json");
    std::error_code ec;
    std::filesystem::remove(sidecar, ec);

    auto expand = [&](std::string tpl, const std::filesystem::path& in, const std::filesystem::path& out) {
        tpl = detail::substitute(std::move(tpl), "input", detail::shell_quote(in.string()));
        tpl = detail::substitute(std::move(tpl), "output", detail::shell_quote(out.string()));
        tpl = detail::substitute(std::move(tpl), "sidecar", detail::shell_quote(sidecar.string()));
        tpl = detail::substitute(std::move(tpl), "width", std::to_string(rep.resolution.width));
        tpl = detail::substitute(std::move(tpl), "height", std::to_string(rep.height()));
        return detail::substitute(std::move(tpl), "qp", std::to_string(rep.qp));
    };

    double enc_wall = 0, dec_wall = 0;
    {
        MeasurementToken token(cmd.lock_file);
        enc_wall = detail::run_timed(expand(cmd.encode_template, video_path, bitstream), cmd.timeout);
        if (!cmd.decode_template.empty()) {
            dec_wall = detail::run_timed(expand(cmd.decode_template, bitstream, decoded), cmd.timeout);
        }
    }

    std::ifstream in(sidecar);
    if (!in) throw Error(ErrorCode::ParseFailure, "sidecar not written: " + sidecar.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseFailure, std::string("sidecar: ") + e.what());
    }
    if (!doc.is_object()) throw Error(ErrorCode::ParseFailure, "sidecar is not a JSON object");

    MeasurementRecord r;
    r.video_id = video_path.stem().string();
    r.rep = rep;
    r.enc_time = detail::sidecar_number(doc, "enc_time_s", false).value_or(enc_wall);
    r.dec_time = detail::sidecar_number(doc, "dec_time_s", false).value_or(dec_wall);
    r.bitrate = *detail::sidecar_number(doc, "bitrate_kbps", true);
    r.psnr = *detail::sidecar_number(doc, "psnr_db", true);
    r.vmaf = *detail::sidecar_number(doc, "vmaf", true);
    auto enc_energy = detail::sidecar_number(doc, "enc_energy_wh", false);
    auto dec_energy = detail::sidecar_number(doc, "dec_energy_wh", false);
    r.enc_energy = enc_energy ? *enc_energy : energy_from_time(r.enc_time, cmd.enc_power);
    r.dec_energy = dec_energy ? *dec_energy : energy_from_time(r.dec_time, cmd.dec_power);
    r.validate();
    return r;
}

/// Provider adapter: video ids resolve to files in `video_dir` with `extension`.
class ExternalProvider {
public:
    ExternalProvider(ExternalCommand cmd, std::filesystem::path video_dir, std::string extension)
        : cmd_(std::move(cmd)), video_dir_(std::move(video_dir)), extension_(std::move(extension)) {}

    MeasurementRecord measure(std::string_view video_id, const Representation& rep) const {
        auto rec = external_measure(cmd_, video_dir_ / (std::string(video_id) + extension_), rep);
        rec.video_id = std::string(video_id);
        return rec;
    }

private:
    ExternalCommand cmd_;
    std::filesystem::path video_dir_;
    std::string extension_;
};

} // namespace greenladder
