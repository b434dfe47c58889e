#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "greenladder/core_model.hpp"
#include "greenladder/error.hpp"
#include "greenladder/metrics.hpp"
#include "greenladder/parallel.hpp"
#include "greenladder/predictor.hpp"
#include "greenladder/random.hpp"

namespace greenladder {

// ---------------------------------------------------------------------------
// Feature construction
// ---------------------------------------------------------------------------

struct TrainingSet {
    std::vector<FeatureVector> X;
    std::vector<double> y;
    std::vector<const MeasurementRecord*> rows; // source record per sample
};

/// One sample per record whose representation lies in `space`. The anchor
/// value comes from the same video's record at `anchor_rep` (the ladder's
/// anchor unless overridden, e.g. by an anchor sweep).
inline TrainingSet build_training_set(const Dataset& ds, const ConfigSpace& space, Target target,
                                      std::optional<Representation> anchor_rep = std::nullopt) {
    const Representation anchor = anchor_rep.value_or(space.anchor());
    TrainingSet set;
    std::string current;
    double anchor_value = 0;
    for (const auto& r : ds.records()) {
        if (!space.contains(r.rep)) continue;
        if (r.video_id != current || set.X.empty()) {
            const auto* a = ds.find(r.video_id, anchor);
            if (a == nullptr) throw Error(ErrorCode::MissingAnchorRecord, r.video_id + " " + to_string(anchor));
            anchor_value = anchor_input(anchor_from_record(*a), target);
            current = r.video_id;
        }
        set.X.push_back(FeatureVector{anchor_value, r.rep.height(), r.rep.qp});
        set.y.push_back(target_value(r, target));
        set.rows.push_back(&r);
    }
    return set;
}

// ---------------------------------------------------------------------------
// Grid search
// ---------------------------------------------------------------------------

using HyperGrid = std::map<std::string, std::vector<double>>;

/// Cartesian product in key order (std::map, so alphabetical), last key fastest.
inline std::vector<Hyperparameters> expand_grid(const HyperGrid& grid) {
    std::vector<Hyperparameters> out{Hyperparameters{}};
    for (const auto& [name, values] : grid) {
        if (values.empty()) throw Error(ErrorCode::EmptyGrid, "no values for '" + name + "'");
        std::vector<Hyperparameters> next;
        next.reserve(out.size() * values.size());
        for (const auto& partial : out) {
            for (double v : values) {
                auto h = partial;
                h[name] = v;
                next.push_back(std::move(h));
            }
        }
        out = std::move(next);
    }
    return out;
}

/// Search spaces of the evaluation: LR none, Ridge alpha, RF / depth-wise
/// boosting / leaf-wise boosting trees, depth, rate and their specific knob,
/// MLP width, depth and rate.
inline HyperGrid paper_grid(Family f) {
    switch (f) {
    case Family::linear: return {};
    case Family::ridge: return {{"alpha", {0.1, 1.0, 10.0, 100.0}}};
    case Family::random_forest:
        return {{"n_trees", {50, 100, 200}},
                {"d_max", {kNone, 10, 20}},
                {"min_samples_split", {2, 5}},
                {"min_samples_leaf", {1, 2}}};
    case Family::gbm_depthwise:
        return {{"n_trees", {50, 100, 200}}, {"d_max", {3, 6, 9}}, {"eta", {0.01, 0.1, 0.2}}, {"subsample", {0.8, 1.0}}};
    case Family::gbm_leafwise:
        return {{"n_trees", {50, 100, 200}}, {"d_max", {3, 6, 9}}, {"eta", {0.01, 0.1, 0.2}}, {"num_leaves", {31, 50, 100}}};
    case Family::mlp: return {{"h_size", {64, 128, 256}}, {"h_num", {1, 2}}, {"eta", {0.001, 0.01}}};
    }
    return {};
}

/// A subset of paper_grid for quick runs; every value also appears there.
inline HyperGrid compact_grid(Family f) {
    switch (f) {
    case Family::linear: return {};
    case Family::ridge: return {{"alpha", {0.1, 1.0, 10.0, 100.0}}};
    case Family::random_forest:
        return {{"n_trees", {50}}, {"d_max", {kNone, 10}}, {"min_samples_split", {2}}, {"min_samples_leaf", {1, 2}}};
    case Family::gbm_depthwise:
        return {{"n_trees", {100, 200}}, {"d_max", {3, 6}}, {"eta", {0.1}}, {"subsample", {0.8, 1.0}}};
    case Family::gbm_leafwise:
        return {{"n_trees", {100, 200}}, {"d_max", {6}}, {"eta", {0.1}}, {"num_leaves", {31}}};
    case Family::mlp: return {{"h_size", {64}}, {"h_num", {1, 2}}, {"eta", {0.01}}};
    }
    return {};
}

enum class GridPreset { paper, compact };

inline GridPreset grid_preset_from_string(std::string_view s) {
    if (s == "paper") return GridPreset::paper;
    if (s == "compact") return GridPreset::compact;
    throw Error(ErrorCode::InvalidArgument, "unknown grid preset '" + std::string(s) + "'");
}

inline HyperGrid preset_grid(Family f, GridPreset preset) {
    return preset == GridPreset::paper ? paper_grid(f) : compact_grid(f);
}

struct CvCandidate {
    ModelSpec spec;
    double mean_score = 0;
    std::vector<double> fold_scores;
};

struct CvResult {
    ModelSpec best_spec;
    double mean_score = 0;
    std::vector<double> per_fold_scores;
    std::vector<CvCandidate> candidates; // in enumeration order
};

/// Seeded k-fold assignment: Rng(seed) shuffles 0..n-1, then consecutive
/// chunks form folds, the first n % k folds one sample larger.
inline std::vector<int> kfold_assignment(std::size_t n, int k, std::uint64_t seed) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(perm);
    std::vector<int> fold(n);
    const std::size_t base = n / static_cast<std::size_t>(k), extra = n % static_cast<std::size_t>(k);
    std::size_t pos = 0;
    for (int f = 0; f < k; ++f) {
        const std::size_t size = base + (static_cast<std::size_t>(f) < extra ? 1 : 0);
        for (std::size_t j = 0; j < size; ++j) fold[perm[pos++]] = f;
    }
    return fold;
}

/// Exhaustive search scored by mean held-out R^2; the first best candidate in
/// enumeration order wins. Fold assignment is shared by all candidates.
inline CvResult grid_search_cv(Family family, const HyperGrid& grid, std::span<const FeatureVector> X,
                               std::span<const double> y, int k, std::uint64_t seed, unsigned threads = 1) {
    if (k < 2) throw Error(ErrorCode::InvalidArgument, "k must be at least 2");
    if (X.size() != y.size()) throw Error(ErrorCode::InvalidArgument, "X and y differ in length");
    if (X.size() < static_cast<std::size_t>(k)) {
        throw Error(ErrorCode::TooFewSamples, std::to_string(X.size()) + " samples for " + std::to_string(k) + " folds");
    }
    const auto settings = expand_grid(grid);
    if (settings.empty()) throw Error(ErrorCode::EmptyGrid, std::string(to_string(family)));

    const auto fold = kfold_assignment(X.size(), k, seed);
    std::vector<CvCandidate> candidates(settings.size());
    parallel_for(settings.size(), threads, [&](std::size_t c) {
        ModelSpec spec{family, settings[c], seed};
        spec.validate();
        std::vector<double> scores;
        for (int f = 0; f < k; ++f) {
            std::vector<FeatureVector> xtr, xte;
            std::vector<double> ytr, yte;
            for (std::size_t i = 0; i < X.size(); ++i) {
                if (fold[i] == f) {
                    xte.push_back(X[i]);
                    yte.push_back(y[i]);
                } else {
                    xtr.push_back(X[i]);
                    ytr.push_back(y[i]);
                }
            }
            const auto model = fit(spec, xtr, ytr);
            scores.push_back(r_squared(yte, predict(model, xte)));
        }
        double mean = 0;
        for (double s : scores) mean += s;
        candidates[c] = CvCandidate{spec, mean / static_cast<double>(k), std::move(scores)};
    });

    std::size_t best = 0;
    for (std::size_t c = 1; c < candidates.size(); ++c) {
        if (candidates[c].mean_score > candidates[best].mean_score) best = c;
    }
    CvResult result;
    result.best_spec = candidates[best].spec;
    result.mean_score = candidates[best].mean_score;
    result.per_fold_scores = candidates[best].fold_scores;
    result.candidates = std::move(candidates);
    return result;
}

// ---------------------------------------------------------------------------
// Training every target
// ---------------------------------------------------------------------------

struct TrainOptions {
    std::vector<Family> families{std::begin(kAllFamilies), std::end(kAllFamilies)};
    std::vector<Target> targets{std::begin(kAllTargets), std::end(kAllTargets)};
    GridPreset preset = GridPreset::paper;
    std::map<Family, HyperGrid> grid_overrides;
    int folds = 5;
    unsigned threads = 1;

    HyperGrid grid_for(Family f) const {
        auto it = grid_overrides.find(f);
        return it != grid_overrides.end() ? it->second : preset_grid(f, preset);
    }
};

struct FamilyOutcome {
    Family family = Family::linear;
    CvResult cv;
    TrainedPredictor model; // best spec refitted on the whole training set
};

struct TargetTraining {
    Target target = Target::enc_energy;
    std::vector<FamilyOutcome> families;
    std::size_t best = 0; // highest mean CV R^2, earliest family on ties

    const FamilyOutcome& best_outcome() const { return families.at(best); }
};

using TrainingResult = std::map<Target, TargetTraining>;

inline TrainingResult train_all(const Dataset& ds_train, const ConfigSpace& space, std::uint64_t seed,
                                const TrainOptions& options = {}) {
    if (options.families.empty() || options.targets.empty()) {
        throw Error(ErrorCode::EmptyGrid, "no families or targets selected");
    }
    TrainingResult result;
    for (Target target : options.targets) {
        const auto set = build_training_set(ds_train, space, target);
        TargetTraining tt;
        tt.target = target;
        for (Family family : options.families) {
            FamilyOutcome fo;
            fo.family = family;
            fo.cv = grid_search_cv(family, options.grid_for(family), set.X, set.y, options.folds, seed, options.threads);
            fo.model = fit(fo.cv.best_spec, set.X, set.y, target);
            tt.families.push_back(std::move(fo));
        }
        for (std::size_t i = 1; i < tt.families.size(); ++i) {
            if (tt.families[i].cv.mean_score > tt.families[tt.best].cv.mean_score) tt.best = i;
        }
        result.emplace(target, std::move(tt));
    }
    return result;
}

/// Held-out accuracy of a predictor over every in-space record of `ds_test`.
inline RegressionReport evaluate_predictor(const TrainedPredictor& p, const Dataset& ds_test, const ConfigSpace& space) {
    const auto set = build_training_set(ds_test, space, p.target);
    return regression_report(set.y, predict(p, set.X));
}

inline nlohmann::json cv_to_json(const CvResult& cv) {
    nlohmann::json cands = nlohmann::json::array();
    for (const auto& c : cv.candidates) {
        cands.push_back({{"hyperparameters", c.spec.hyperparameters}, {"mean_r2", c.mean_score}, {"fold_r2", c.fold_scores}});
    }
    return {{"family", std::string(to_string(cv.best_spec.family))},
            {"best_hyperparameters", cv.best_spec.hyperparameters},
            {"mean_r2", cv.mean_score},
            {"fold_r2", cv.per_fold_scores},
            {"candidates", cands}};
}

} // namespace greenladder
