#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "greenladder/core_model.hpp"
#include "greenladder/measurement.hpp"
#include "greenladder/random.hpp"
#include "greenladder/selector.hpp"

namespace greenladder::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path()
              / ("greenladder_test_" + tag + "_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

inline Dataset synth(int videos, double noise = 0.05, std::uint64_t seed = 42,
                     const ConfigSpace& space = ConfigSpace::paper_ladder()) {
    SyntheticWorldParams p;
    p.n_videos = videos;
    p.noise_sd = noise;
    p.seed = seed;
    return synth_generate(p, space);
}

/// Random prediction grid of h x q cells. Values are drawn from a small set so
/// that ties in energy and quality are frequent.
inline PredictionGrid random_grid(Rng& rng, int h, int q, bool coarse) {
    std::vector<int> heights, qps;
    for (int i = 0; i < h; ++i) heights.push_back(144 + 120 * i);
    for (int i = 0; i < q; ++i) qps.push_back(10 + 5 * i);
    const ConfigSpace space(heights, qps);
    PredictionGrid g;
    g.video_id = "g";
    for (const auto& rep : space.representations()) {
        GridCell c;
        c.rep = rep;
        if (coarse) {
            c.e_enc_hat = static_cast<double>(rng.index(4));
            c.e_dec_hat = static_cast<double>(rng.index(3));
            c.q_hat = 90.0 + static_cast<double>(rng.index(5)) * 2.5;
        } else {
            c.e_enc_hat = rng.uniform(0.0, 50.0);
            c.e_dec_hat = rng.uniform(0.0, 5.0);
            c.q_hat = rng.uniform(20.0, 100.0);
        }
        c.e_total_hat = c.e_enc_hat + c.e_dec_hat;
        g.cells.push_back(c);
    }
    return g;
}

/// Exhaustive reference: scan every cell, keep the feasible ones, then pick by
/// sorting on (energy asc, quality desc, height asc, qp desc).
inline GridCell brute_force_select(const PredictionGrid& g, double rho) {
    double q_max = -1e300;
    for (const auto& c : g.cells) q_max = std::max(q_max, c.q_hat);
    const double thr = std::min((1.0 - rho) * q_max, q_max);
    std::vector<GridCell> feasible;
    for (const auto& c : g.cells) {
        if (c.q_hat >= thr) feasible.push_back(c);
    }
    std::sort(feasible.begin(), feasible.end(), [](const GridCell& a, const GridCell& b) {
        return std::make_tuple(a.e_total_hat, -a.q_hat, a.rep.height(), -a.rep.qp)
             < std::make_tuple(b.e_total_hat, -b.q_hat, b.rep.height(), -b.rep.qp);
    });
    return feasible.front();
}

} // namespace greenladder::testing
