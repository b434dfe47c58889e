#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "greenladder/core_model.hpp"
#include "greenladder/error.hpp"
#include "greenladder/metrics.hpp"
#include "greenladder/parallel.hpp"
#include "greenladder/training.hpp"

namespace greenladder {

/// Two-pass Pearson coefficient.
inline double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) throw Error(ErrorCode::TooFewSamples, "pearson needs two paired samples");
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0 || sbb == 0) throw Error(ErrorCode::ZeroVariance, "constant series");
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

struct CorrelationMatrix {
    std::vector<Representation> configs;
    std::vector<std::vector<double>> values; // symmetric, unit diagonal

    std::size_t dimension() const { return configs.size(); }
};

/// Per-config vector of encoding times across videos (video ids ascending).
inline std::vector<std::vector<double>> enc_time_columns(const Dataset& ds, std::span<const Representation> configs) {
    const auto ids = ds.video_ids();
    std::vector<std::vector<double>> cols(configs.size());
    for (std::size_t c = 0; c < configs.size(); ++c) {
        cols[c].reserve(ids.size());
        for (const auto& id : ids) {
            const auto* r = ds.find(id, configs[c]);
            if (r == nullptr) throw Error(ErrorCode::MissingCell, id + " " + to_string(configs[c]));
            cols[c].push_back(r->enc_time);
        }
    }
    return cols;
}

/// Pearson correlation of encoding times across videos for every config pair.
inline CorrelationMatrix pairwise_correlation(const Dataset& ds, const ConfigSpace& space) {
    CorrelationMatrix cm;
    cm.configs = space.representations();
    const auto cols = enc_time_columns(ds, cm.configs);
    const std::size_t d = cm.configs.size();
    for (std::size_t c = 0; c < d; ++c) {
        if (std::all_of(cols[c].begin(), cols[c].end(), [&](double v) { return v == cols[c].front(); })) {
            throw Error(ErrorCode::ZeroVariance, to_string(cm.configs[c]));
        }
    }
    cm.values.assign(d, std::vector<double>(d, 1.0));
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i + 1; j < d; ++j) {
            cm.values[i][j] = cm.values[j][i] = pearson(cols[i], cols[j]);
        }
    }
    return cm;
}

struct AnchorRankingRow {
    Representation config;
    double mean_corr = 0; // mean off-diagonal correlation; NaN for a 1x1 matrix
    double mean_time = 0; // mean encoding time across videos, seconds
};

/// Configs ordered by ascending mean encoding time (stable on ties).
inline std::vector<AnchorRankingRow> anchor_ranking(const CorrelationMatrix& cm, const Dataset& ds) {
    const auto cols = enc_time_columns(ds, cm.configs);
    const std::size_t d = cm.dimension();
    std::vector<AnchorRankingRow> rows;
    for (std::size_t i = 0; i < d; ++i) {
        double s = 0;
        for (std::size_t j = 0; j < d; ++j) {
            if (j != i) s += cm.values[i][j];
        }
        double t = 0;
        for (double v : cols[i]) t += v;
        rows.push_back(AnchorRankingRow{cm.configs[i],
                                        d > 1 ? s / static_cast<double>(d - 1) : std::numeric_limits<double>::quiet_NaN(),
                                        cols[i].empty() ? 0.0 : t / static_cast<double>(cols[i].size())});
    }
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.mean_time < b.mean_time; });
    return rows;
}

struct AnchorSweepRow {
    Representation anchor;
    double mean_anchor_time = 0;
    double r2 = 0;
};

/// Six candidates spanning low / mid / high resolution at the extreme QPs.
inline std::vector<Representation> default_sweep_candidates(const ConfigSpace& space) {
    const auto& res = space.resolutions();
    std::vector<Resolution> picks{res.front()};
    auto mid = std::find_if(res.begin(), res.end(), [](const auto& r) { return r.height == 1080; });
    picks.push_back(mid != res.end() ? *mid : res[res.size() / 2]);
    picks.push_back(res.back());
    std::vector<Representation> out;
    for (const auto& r : picks) {
        for (int qp : {space.min_qp(), space.max_qp()}) {
            Representation rep{r, qp};
            if (std::find(out.begin(), out.end(), rep) == out.end()) out.push_back(rep);
        }
    }
    return out;
}

struct SweepOptions {
    Family family = Family::gbm_depthwise;
    Target target = Target::enc_energy;
    std::optional<HyperGrid> grid; // default: compact grid of the family
    double train_fraction = 0.7;
    int folds = 5;
    unsigned threads = 1;
};

/// For each candidate anchor: rebuild features with that anchor's encoding
/// time, grid-search and refit on the train split, report test R^2.
inline std::vector<AnchorSweepRow> anchor_sweep(const Dataset& ds, std::span<const Representation> candidates,
                                                std::uint64_t seed, const SweepOptions& options = {}) {
    const auto space = ds.inferred_space();
    const auto split = split_by_video(ds, options.train_fraction, seed);
    const auto grid = options.grid.value_or(compact_grid(options.family));
    std::vector<AnchorSweepRow> rows(candidates.size());
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        const auto& cand = candidates[c];
        if (!space.contains(cand)) throw Error(ErrorCode::InvalidArgument, "candidate " + to_string(cand) + " outside ladder");
        const auto train = build_training_set(split.train, space, options.target, cand);
        const auto test = build_training_set(split.test, space, options.target, cand);
        const auto cv = grid_search_cv(options.family, grid, train.X, train.y, options.folds, seed, options.threads);
        const auto model = fit(cv.best_spec, train.X, train.y, options.target);
        const auto cols = enc_time_columns(ds, std::span<const Representation>(&cand, 1));
        double t = 0;
        for (double v : cols[0]) t += v;
        rows[c] = AnchorSweepRow{cand, t / static_cast<double>(cols[0].size()), r_squared(test.y, predict(model, test.X))};
    }
    return rows;
}

} // namespace greenladder
