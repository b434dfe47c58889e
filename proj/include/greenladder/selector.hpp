#pragma once

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "greenladder/core_model.hpp"
#include "greenladder/error.hpp"
#include "greenladder/metrics.hpp"
#include "greenladder/predictor.hpp"

namespace greenladder {

/// Allowed fractional quality loss relative to the best predicted quality.
class Rho {
public:
    explicit Rho(double value) : value_(value) {
        if (!(value >= 0.0 && value <= 1.0)) throw Error(ErrorCode::InvalidArgument, "rho must lie in [0, 1]");
    }
    double value() const { return value_; }
    friend bool operator==(const Rho&, const Rho&) = default;

private:
    double value_;
};

struct GridCell {
    Representation rep;
    double e_enc_hat = 0;
    double e_dec_hat = 0;
    double e_total_hat = 0;
    double q_hat = 0;

    friend bool operator==(const GridCell&, const GridCell&) = default;
};

/// Predicted energy and quality for every representation of one video.
struct PredictionGrid {
    std::string video_id;
    std::vector<GridCell> cells; // resolution-major, ascending
};

/// Multipliers on the two energy stages. (1, 1) minimizes plain enc + dec; a
/// larger decode weight models one encode amortized over many playbacks.
struct StageWeights {
    double encode = 1.0;
    double decode = 1.0;
};

using PredictorSet = std::map<Target, TrainedPredictor>;

inline const TrainedPredictor& require_model(const PredictorSet& models, Target t) {
    auto it = models.find(t);
    if (it == models.end()) throw Error(ErrorCode::MissingModel, std::string(to_string(t)));
    return it->second;
}

/// Evaluates f_enc, f_dec and f_q once per (resolution, qp).
inline PredictionGrid build_grid(const PredictorSet& models, const AnchorMeasurement& anchor, const ConfigSpace& space,
                                 QualityMetric metric = QualityMetric::vmaf, StageWeights weights = {}) {
    const auto& f_enc = require_model(models, Target::enc_energy);
    const auto& f_dec = require_model(models, Target::dec_energy);
    const auto& f_q = require_model(models, quality_target(metric));

    const auto reps = space.representations();
    auto features = [&](Target t) {
        std::vector<FeatureVector> X;
        X.reserve(reps.size());
        const double a = anchor_input(anchor, t);
        for (const auto& rep : reps) X.push_back(FeatureVector{a, rep.height(), rep.qp});
        return X;
    };
    const auto e_enc = predict(f_enc, features(Target::enc_energy));
    const auto e_dec = predict(f_dec, features(Target::dec_energy));
    const auto q = predict(f_q, features(quality_target(metric)));

    PredictionGrid grid;
    grid.video_id = anchor.video_id;
    grid.cells.reserve(reps.size());
    for (std::size_t i = 0; i < reps.size(); ++i) {
        grid.cells.push_back(GridCell{reps[i], e_enc[i], e_dec[i], weights.encode * e_enc[i] + weights.decode * e_dec[i], q[i]});
    }
    return grid;
}

struct SelectionResult {
    Representation chosen;
    double q_max_hat = 0;
    double threshold = 0;
    std::vector<Representation> feasible;
    GridCell predicted;
};

/// Threshold (1 - rho) * q_max. For a negative q_max the multiplicative form
/// would exclude the best cell itself, so the threshold is capped at q_max.
inline double quality_threshold(double q_max, double rho) { return std::min((1.0 - rho) * q_max, q_max); }

/// Strict preference among feasible cells: lower predicted energy, then higher
/// predicted quality, then lower resolution, then higher QP.
inline bool preferred(const GridCell& a, const GridCell& b) {
    if (a.e_total_hat != b.e_total_hat) return a.e_total_hat < b.e_total_hat;
    if (a.q_hat != b.q_hat) return a.q_hat > b.q_hat;
    if (a.rep.height() != b.rep.height()) return a.rep.height() < b.rep.height();
    return a.rep.qp > b.rep.qp;
}

inline SelectionResult select(const PredictionGrid& grid, Rho rho) {
    if (grid.cells.empty()) throw Error(ErrorCode::EmptyGrid, grid.video_id);
    double q_max = grid.cells.front().q_hat;
    for (const auto& c : grid.cells) q_max = std::max(q_max, c.q_hat);
    const double threshold = quality_threshold(q_max, rho.value());

    SelectionResult result;
    result.q_max_hat = q_max;
    result.threshold = threshold;
    const GridCell* best = nullptr;
    for (const auto& c : grid.cells) {
        if (!(c.q_hat >= threshold)) continue;
        result.feasible.push_back(c.rep);
        if (best == nullptr || preferred(c, *best)) best = &c;
    }
    result.chosen = best->rep;
    result.predicted = *best;
    return result;
}

inline nlohmann::json rep_to_json(const Representation& r) {
    return {{"height", r.height()}, {"width", r.resolution.width}, {"qp", r.qp}};
}

inline nlohmann::json to_json(const SelectionResult& s, std::string_view video_id = {}, double rho = -1) {
    nlohmann::json feasible = nlohmann::json::array();
    for (const auto& r : s.feasible) feasible.push_back(rep_to_json(r));
    nlohmann::json j;
    if (!video_id.empty()) j["video_id"] = std::string(video_id);
    if (rho >= 0) j["rho"] = rho;
    j["chosen"] = rep_to_json(s.chosen);
    j["q_max_hat"] = s.q_max_hat;
    j["threshold"] = s.threshold;
    j["predicted"] = {{"e_enc_hat_wh", s.predicted.e_enc_hat},
                      {"e_dec_hat_wh", s.predicted.e_dec_hat},
                      {"e_total_hat_wh", s.predicted.e_total_hat},
                      {"q_hat", s.predicted.q_hat}};
    j["feasible"] = feasible;
    return j;
}

// ---------------------------------------------------------------------------
// Policy evaluation
// ---------------------------------------------------------------------------

struct VideoSelection {
    std::string video_id;
    double rho = 0;
    SelectionResult selection;
    const MeasurementRecord* truth = nullptr;
};

struct PolicyEvaluation {
    std::vector<PolicyReport> reports;    // one per rho, input order
    std::vector<VideoSelection> choices;  // per rho, per video
};

/// Selects per video for each rho and scores the chosen representations by
/// their measured values. Savings are per-video ratios against that video's
/// rho = 0 choice, averaged over videos; drops are differences of averages.
inline PolicyEvaluation evaluate_policy_detailed(const Dataset& ds_test, const PredictorSet& models,
                                                 const ConfigSpace& space, std::span<const Rho> rho_list,
                                                 QualityMetric metric = QualityMetric::vmaf, StageWeights weights = {}) {
    const auto ids = ds_test.video_ids();
    if (ids.empty()) throw Error(ErrorCode::EmptyInput, "test set has no videos");

    auto truth_of = [&](const std::string& id, const Representation& rep) {
        const auto* rec = ds_test.find(id, rep);
        if (rec == nullptr) throw Error(ErrorCode::MissingGroundTruth, id + " " + to_string(rep));
        return rec;
    };

    std::vector<PredictionGrid> grids;
    std::vector<const MeasurementRecord*> baseline;
    std::vector<double> baseline_pred;
    for (const auto& id : ids) {
        grids.push_back(build_grid(models, anchor_of(ds_test, id, space), space, metric, weights));
        const auto sel = select(grids.back(), Rho(0.0));
        baseline.push_back(truth_of(id, sel.chosen));
        baseline_pred.push_back(sel.predicted.e_total_hat);
    }

    PolicyEvaluation out;
    const double n = static_cast<double>(ids.size());
    double base_vmaf = 0, base_psnr = 0;
    for (const auto* b : baseline) {
        base_vmaf += b->vmaf / n;
        base_psnr += b->psnr / n;
    }
    for (const Rho& rho : rho_list) {
        PolicyReport rep;
        rep.rho = rho.value();
        rep.n_videos = ids.size();
        for (std::size_t v = 0; v < ids.size(); ++v) {
            const auto sel = select(grids[v], rho);
            const auto* t = truth_of(ids[v], sel.chosen);
            rep.avg_vmaf += t->vmaf / n;
            rep.avg_psnr += t->psnr / n;
            rep.enc_savings_pct += energy_savings_pct(baseline[v]->enc_energy, t->enc_energy) / n;
            rep.dec_savings_pct += energy_savings_pct(baseline[v]->dec_energy, t->dec_energy) / n;
            rep.total_savings_pct += energy_savings_pct(baseline[v]->enc_energy + baseline[v]->dec_energy,
                                                        t->enc_energy + t->dec_energy) / n;
            // Predicted energies can be non-positive for poorly fitted models; the
            // predicted savings are then undefined.
            rep.predicted_total_savings_pct += baseline_pred[v] > 0
                ? energy_savings_pct(baseline_pred[v], sel.predicted.e_total_hat) / n
                : std::numeric_limits<double>::quiet_NaN();
            out.choices.push_back(VideoSelection{ids[v], rho.value(), sel, t});
        }
        rep.vmaf_drop = quality_drop(base_vmaf, rep.avg_vmaf);
        rep.psnr_drop = quality_drop(base_psnr, rep.avg_psnr);
        out.reports.push_back(rep);
    }
    return out;
}

inline std::vector<PolicyReport> evaluate_policy(const Dataset& ds_test, const PredictorSet& models,
                                                 const ConfigSpace& space, std::span<const Rho> rho_list,
                                                 QualityMetric metric = QualityMetric::vmaf) {
    return evaluate_policy_detailed(ds_test, models, space, rho_list, metric).reports;
}

} // namespace greenladder
