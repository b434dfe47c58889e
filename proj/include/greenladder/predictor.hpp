#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "greenladder/core_model.hpp"
#include "greenladder/error.hpp"
#include "greenladder/ml/features.hpp"
#include "greenladder/ml/forest.hpp"
#include "greenladder/ml/gbm.hpp"
#include "greenladder/ml/linear.hpp"
#include "greenladder/ml/mlp.hpp"

namespace greenladder {

using ml::FeatureRow;

/// (anchor value, height, qp) input of f_enc / f_dec / f_q.
struct FeatureVector {
    double anchor_value = 0;
    int height = 0;
    int qp = 0;

    FeatureRow row() const { return {anchor_value, static_cast<double>(height), static_cast<double>(qp)}; }
};

inline std::vector<FeatureRow> to_rows(std::span<const FeatureVector> X) {
    std::vector<FeatureRow> rows;
    rows.reserve(X.size());
    for (const auto& x : X) {
        if (!std::isfinite(x.anchor_value)) throw Error(ErrorCode::NonFiniteInput, "anchor_value");
        if (x.anchor_value < 0) throw Error(ErrorCode::InvariantViolation, "anchor_value");
        rows.push_back(x.row());
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Families, targets, specs
// ---------------------------------------------------------------------------

enum class Family { linear, ridge, random_forest, gbm_depthwise, gbm_leafwise, mlp };

inline constexpr Family kAllFamilies[] = {Family::linear,        Family::ridge,        Family::random_forest,
                                          Family::gbm_depthwise, Family::gbm_leafwise, Family::mlp};

inline std::string_view to_string(Family f) {
    switch (f) {
    case Family::linear: return "linear";
    case Family::ridge: return "ridge";
    case Family::random_forest: return "random_forest";
    case Family::gbm_depthwise: return "gbm_depthwise";
    case Family::gbm_leafwise: return "gbm_leafwise";
    case Family::mlp: return "mlp";
    }
    return "?";
}

inline Family family_from_string(std::string_view s) {
    for (Family f : kAllFamilies) {
        if (to_string(f) == s) return f;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown model family '" + std::string(s) + "'");
}

enum class Target { enc_energy, dec_energy, psnr, vmaf };

inline constexpr Target kAllTargets[] = {Target::enc_energy, Target::dec_energy, Target::psnr, Target::vmaf};

inline std::string_view to_string(Target t) {
    switch (t) {
    case Target::enc_energy: return "enc_energy";
    case Target::dec_energy: return "dec_energy";
    case Target::psnr: return "psnr";
    case Target::vmaf: return "vmaf";
    }
    return "?";
}

inline Target target_from_string(std::string_view s) {
    for (Target t : kAllTargets) {
        if (to_string(t) == s) return t;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown target '" + std::string(s) + "'");
}

inline Target quality_target(QualityMetric m) { return m == QualityMetric::vmaf ? Target::vmaf : Target::psnr; }

/// Value of `target` in a measurement.
inline double target_value(const MeasurementRecord& r, Target t) {
    switch (t) {
    case Target::enc_energy: return r.enc_energy;
    case Target::dec_energy: return r.dec_energy;
    case Target::psnr: return r.psnr;
    case Target::vmaf: return r.vmaf;
    }
    return 0;
}

/// Anchor input paired with `target`: t_enc for encoding energy, t_dec for
/// decoding energy, the same quality metric's anchor score for quality.
inline double anchor_input(const AnchorMeasurement& a, Target t) {
    switch (t) {
    case Target::enc_energy: return a.enc_time;
    case Target::dec_energy: return a.dec_time;
    case Target::psnr: return a.psnr;
    case Target::vmaf: return a.vmaf;
    }
    return 0;
}

/// Hyperparameter values are numeric; -1 stands for "None" (no depth limit).
using Hyperparameters = std::map<std::string, double>;

inline constexpr double kNone = -1.0;

inline const std::set<std::string>& hyperparameter_names(Family f) {
    static const std::map<Family, std::set<std::string>> names{
        {Family::linear, {}},
        {Family::ridge, {"alpha"}},
        {Family::random_forest, {"n_trees", "d_max", "min_samples_split", "min_samples_leaf"}},
        {Family::gbm_depthwise, {"n_trees", "d_max", "eta", "subsample"}},
        {Family::gbm_leafwise, {"n_trees", "d_max", "eta", "num_leaves"}},
        {Family::mlp, {"h_size", "h_num", "eta"}},
    };
    return names.at(f);
}

struct ModelSpec {
    Family family = Family::linear;
    Hyperparameters hyperparameters;
    std::uint64_t seed = 0;

    void validate() const {
        const auto& allowed = hyperparameter_names(family);
        for (const auto& [name, value] : hyperparameters) {
            if (!allowed.contains(name)) {
                throw Error(ErrorCode::InvalidArgument,
                            "hyperparameter '" + name + "' is not defined for " + std::string(to_string(family)));
            }
            if (!std::isfinite(value)) throw Error(ErrorCode::NonFiniteInput, "hyperparameter " + name);
        }
    }

    double get(const std::string& name, double fallback) const {
        auto it = hyperparameters.find(name);
        return it == hyperparameters.end() ? fallback : it->second;
    }

    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

inline std::string describe(const ModelSpec& spec) {
    std::string s(to_string(spec.family));
    if (spec.hyperparameters.empty()) return s;
    s += '(';
    bool first = true;
    for (const auto& [k, v] : spec.hyperparameters) {
        if (!first) s += ", ";
        first = false;
        s += k + "=" + (v == kNone && k == "d_max" ? std::string("None") : detail::format_double(v));
    }
    return s + ')';
}

// ---------------------------------------------------------------------------
// Trained predictor
// ---------------------------------------------------------------------------

struct MlpState {
    ml::Mlp net;
    double y_mean = 0;
    double y_sd = 1;
};

using LearnedState = std::variant<ml::LinearModel, ml::RandomForest, ml::GradientBoosting, MlpState>;

/// A fitted regressor. Linear, ridge and MLP families see standardized
/// features; tree families keep an identity scaler.
struct TrainedPredictor {
    ModelSpec spec;
    Target target = Target::enc_energy;
    ml::Scaler scaler;
    LearnedState state;

    double predict_row(const FeatureRow& raw) const {
        const FeatureRow x = scaler.apply(raw);
        return std::visit(
            [&](const auto& s) -> double {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, MlpState>) {
                    return s.y_mean + s.y_sd * s.net.predict(x);
                } else {
                    return s.predict(x);
                }
            },
            state);
    }
};

namespace detail {

inline int as_int(const ModelSpec& spec, const std::string& name, double fallback) {
    const double v = spec.get(name, fallback);
    return static_cast<int>(std::lround(v));
}

inline ml::TreeParams tree_params(const ModelSpec& spec, bool leafwise) {
    ml::TreeParams p;
    p.max_depth = as_int(spec, "d_max", leafwise ? kNone : (spec.family == Family::gbm_depthwise ? 6 : kNone));
    p.min_samples_split = as_int(spec, "min_samples_split", 2);
    // Leaf-wise growth follows the usual minimum of 20 samples per leaf.
    p.min_samples_leaf = leafwise ? 20 : as_int(spec, "min_samples_leaf", 1);
    if (leafwise) {
        p.best_first = true;
        p.max_leaves = as_int(spec, "num_leaves", 31);
    }
    return p;
}

inline ml::MlpParams mlp_params(const ModelSpec& spec) {
    ml::MlpParams p;
    p.hidden = ml::pyramid_layers(as_int(spec, "h_size", 100), as_int(spec, "h_num", 1));
    p.learning_rate = spec.get("eta", 0.001);
    p.seed = spec.seed;
    return p;
}

} // namespace detail

inline TrainedPredictor fit(const ModelSpec& spec, std::span<const FeatureVector> X, std::span<const double> y,
                            Target target = Target::enc_energy) {
    spec.validate();
    if (X.size() != y.size()) throw Error(ErrorCode::InvalidArgument, "X and y differ in length");
    if (y.empty()) throw Error(ErrorCode::DegenerateDesignMatrix, "no targets");
    if (y.size() < 2) throw Error(ErrorCode::TooFewSamples, "fit needs at least two samples");
    const auto raw = to_rows(X);
    ml::require_finite(y);

    TrainedPredictor p;
    p.spec = spec;
    p.target = target;
    const bool standardize = spec.family == Family::linear || spec.family == Family::ridge || spec.family == Family::mlp;
    p.scaler = standardize ? ml::Scaler::fit(raw) : ml::Scaler::identity();
    const auto rows = standardize ? p.scaler.apply(raw) : raw;

    switch (spec.family) {
    case Family::linear:
        p.state = ml::fit_ols(rows, y);
        break;
    case Family::ridge:
        p.state = ml::fit_ridge(rows, y, spec.get("alpha", 1.0));
        break;
    case Family::random_forest: {
        ml::ForestParams fp;
        fp.n_trees = detail::as_int(spec, "n_trees", 100);
        fp.tree = detail::tree_params(spec, false);
        fp.seed = spec.seed;
        p.state = ml::RandomForest::fit(rows, y, fp);
        break;
    }
    case Family::gbm_depthwise:
    case Family::gbm_leafwise: {
        const bool leafwise = spec.family == Family::gbm_leafwise;
        ml::GbmParams gp;
        gp.n_trees = detail::as_int(spec, "n_trees", 100);
        gp.learning_rate = spec.get("eta", 0.1);
        gp.subsample = leafwise ? 1.0 : spec.get("subsample", 1.0);
        gp.tree = detail::tree_params(spec, leafwise);
        gp.seed = spec.seed;
        p.state = ml::GradientBoosting::fit(rows, y, gp);
        break;
    }
    case Family::mlp: {
        MlpState s;
        double m = 0, v = 0;
        for (double t : y) m += t;
        m /= static_cast<double>(y.size());
        for (double t : y) v += (t - m) * (t - m);
        s.y_mean = m;
        s.y_sd = v > 0 ? std::sqrt(v / static_cast<double>(y.size())) : 1.0;
        std::vector<double> ys(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) ys[i] = (y[i] - s.y_mean) / s.y_sd;
        const auto params = detail::mlp_params(spec);
        s.net = ml::Mlp::initialize(params.hidden, spec.seed);
        s.net.train(rows, ys, params);
        p.state = std::move(s);
        break;
    }
    }
    return p;
}

inline std::vector<double> predict(const TrainedPredictor& p, std::span<const FeatureVector> X) {
    std::vector<double> out;
    out.reserve(X.size());
    for (const auto& x : to_rows(X)) out.push_back(p.predict_row(x));
    return out;
}

inline double predict_one(const TrainedPredictor& p, const FeatureVector& x) {
    return predict(p, std::span<const FeatureVector>(&x, 1)).front();
}

/// Backprop vs central differences for the network `spec` would start from,
/// on standardized features and targets.
inline double mlp_gradient_check(const ModelSpec& spec, std::span<const FeatureVector> X, std::span<const double> y,
                                 double step = 1e-5) {
    if (spec.family != Family::mlp) throw Error(ErrorCode::InvalidArgument, "gradient check needs an mlp spec");
    spec.validate();
    const auto raw = to_rows(X);
    const auto scaler = ml::Scaler::fit(raw);
    const auto rows = scaler.apply(raw);
    double m = 0, v = 0;
    for (double t : y) m += t;
    m /= static_cast<double>(y.size());
    for (double t : y) v += (t - m) * (t - m);
    const double sd = v > 0 ? std::sqrt(v / static_cast<double>(y.size())) : 1.0;
    std::vector<double> ys;
    for (double t : y) ys.push_back((t - m) / sd);
    const auto params = detail::mlp_params(spec);
    return ml::gradient_check(ml::Mlp::initialize(params.hidden, spec.seed), rows, ys, step);
}

// ---------------------------------------------------------------------------
// JSON persistence
// ---------------------------------------------------------------------------

inline constexpr int kModelFormatVersion = 1;

namespace detail {

inline nlohmann::json tree_to_json(const ml::RegressionTree& t) {
    nlohmann::json feature = nlohmann::json::array(), threshold = nlohmann::json::array(),
                   left = nlohmann::json::array(), right = nlohmann::json::array(), value = nlohmann::json::array();
    for (const auto& n : t.nodes()) {
        feature.push_back(n.feature);
        threshold.push_back(n.threshold);
        left.push_back(n.left);
        right.push_back(n.right);
        value.push_back(n.value);
    }
    return {{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"value", value}};
}

inline ml::RegressionTree tree_from_json(const nlohmann::json& j) {
    const auto feature = j.at("feature").get<std::vector<int>>();
    const auto threshold = j.at("threshold").get<std::vector<double>>();
    const auto left = j.at("left").get<std::vector<int>>();
    const auto right = j.at("right").get<std::vector<int>>();
    const auto value = j.at("value").get<std::vector<double>>();
    const auto n = feature.size();
    if (n == 0 || threshold.size() != n || left.size() != n || right.size() != n || value.size() != n) {
        throw Error(ErrorCode::ParseFailure, "inconsistent tree arrays");
    }
    std::vector<ml::TreeNode> nodes(n);
    for (std::size_t i = 0; i < n; ++i) {
        nodes[i] = ml::TreeNode{feature[i], threshold[i], left[i], right[i], value[i]};
        if (nodes[i].feature >= static_cast<int>(ml::kNumFeatures)) throw Error(ErrorCode::ParseFailure, "tree feature index");
        if (!nodes[i].is_leaf()) {
            auto ok = [&](int c) { return c > static_cast<int>(i) && c < static_cast<int>(n); };
            if (!ok(nodes[i].left) || !ok(nodes[i].right)) throw Error(ErrorCode::ParseFailure, "tree child index");
        }
    }
    return ml::RegressionTree(std::move(nodes));
}

} // namespace detail

inline nlohmann::json to_json(const TrainedPredictor& p) {
    nlohmann::json j;
    j["format"] = "greenladder-model";
    j["version"] = kModelFormatVersion;
    j["family"] = std::string(to_string(p.spec.family));
    j["target"] = std::string(to_string(p.target));
    j["seed"] = p.spec.seed;
    j["hyperparameters"] = p.spec.hyperparameters;
    j["scaler"] = {{"mean", p.scaler.mean}, {"sd", p.scaler.sd}};
    nlohmann::json state;
    std::visit(
        [&](const auto& s) {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, ml::LinearModel>) {
                state = {{"coef", s.coef}, {"intercept", s.intercept}};
            } else if constexpr (std::is_same_v<S, ml::RandomForest>) {
                nlohmann::json trees = nlohmann::json::array();
                for (const auto& t : s.trees()) trees.push_back(detail::tree_to_json(t));
                state = {{"trees", trees}};
            } else if constexpr (std::is_same_v<S, ml::GradientBoosting>) {
                nlohmann::json trees = nlohmann::json::array();
                for (const auto& t : s.trees()) trees.push_back(detail::tree_to_json(t));
                state = {{"base", s.base()}, {"learning_rate", s.learning_rate()}, {"trees", trees}};
            } else {
                nlohmann::json layers = nlohmann::json::array();
                for (const auto& l : s.net.layers()) {
                    layers.push_back({{"rows", l.weights.rows()},
                                      {"cols", l.weights.cols()},
                                      {"weights", std::vector<double>(l.weights.data(), l.weights.data() + l.weights.size())},
                                      {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}});
                }
                state = {{"y_mean", s.y_mean}, {"y_sd", s.y_sd}, {"layers", layers}};
            }
        },
        p.state);
    j["state"] = state;
    return j;
}

inline TrainedPredictor predictor_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format") != "greenladder-model") throw Error(ErrorCode::ParseFailure, "not a model document");
        if (j.at("version").get<int>() != kModelFormatVersion) throw Error(ErrorCode::ParseFailure, "unsupported model version");
        TrainedPredictor p;
        p.spec.family = family_from_string(j.at("family").get<std::string>());
        p.spec.seed = j.at("seed").get<std::uint64_t>();
        p.spec.hyperparameters = j.at("hyperparameters").get<Hyperparameters>();
        p.spec.validate();
        p.target = target_from_string(j.at("target").get<std::string>());
        p.scaler.mean = j.at("scaler").at("mean").get<FeatureRow>();
        p.scaler.sd = j.at("scaler").at("sd").get<FeatureRow>();
        const auto& s = j.at("state");
        switch (p.spec.family) {
        case Family::linear:
        case Family::ridge: {
            ml::LinearModel m;
            m.coef = s.at("coef").get<FeatureRow>();
            m.intercept = s.at("intercept").get<double>();
            p.state = m;
            break;
        }
        case Family::random_forest: {
            std::vector<ml::RegressionTree> trees;
            for (const auto& t : s.at("trees")) trees.push_back(detail::tree_from_json(t));
            if (trees.empty()) throw Error(ErrorCode::ParseFailure, "forest without trees");
            p.state = ml::RandomForest(std::move(trees));
            break;
        }
        case Family::gbm_depthwise:
        case Family::gbm_leafwise: {
            std::vector<ml::RegressionTree> trees;
            for (const auto& t : s.at("trees")) trees.push_back(detail::tree_from_json(t));
            p.state = ml::GradientBoosting(s.at("base").get<double>(), s.at("learning_rate").get<double>(), std::move(trees));
            break;
        }
        case Family::mlp: {
            std::vector<ml::Mlp::Layer> layers;
            Eigen::Index expect_cols = static_cast<Eigen::Index>(ml::kNumFeatures);
            for (const auto& l : s.at("layers")) {
                const auto rows = l.at("rows").get<Eigen::Index>();
                const auto cols = l.at("cols").get<Eigen::Index>();
                const auto w = l.at("weights").get<std::vector<double>>();
                const auto b = l.at("bias").get<std::vector<double>>();
                if (cols != expect_cols || static_cast<Eigen::Index>(w.size()) != rows * cols
                    || static_cast<Eigen::Index>(b.size()) != rows) {
                    throw Error(ErrorCode::ParseFailure, "inconsistent mlp layer shape");
                }
                layers.push_back({Eigen::Map<const Eigen::MatrixXd>(w.data(), rows, cols),
                                  Eigen::Map<const Eigen::VectorXd>(b.data(), rows)});
                expect_cols = rows;
            }
            if (layers.empty() || expect_cols != 1) throw Error(ErrorCode::ParseFailure, "mlp must end in one output");
            p.state = MlpState{ml::Mlp(std::move(layers)), s.at("y_mean").get<double>(), s.at("y_sd").get<double>()};
            break;
        }
        }
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseFailure, std::string("model document: ") + e.what());
    }
}

inline void save_predictor(const TrainedPredictor& p, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
    out << to_json(p).dump(1) << '\n';
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

inline TrainedPredictor load_predictor(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    try {
        return predictor_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseFailure, path.string() + ": " + e.what());
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.detail());
    }
}

} // namespace greenladder
