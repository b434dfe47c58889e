#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "greenladder/anchor_analysis.hpp"
#include "greenladder/core_model.hpp"
#include "greenladder/metrics.hpp"
#include "greenladder/training.hpp"

namespace greenladder {

namespace detail {

inline std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

inline std::string pad(std::string s, std::size_t width, bool right = true) {
    if (s.size() >= width) return s;
    return right ? std::string(width - s.size(), ' ') + s : s + std::string(width - s.size(), ' ');
}

} // namespace detail

// ---------------------------------------------------------------------------
// Prediction accuracy table: one row per family, one block per target
// ---------------------------------------------------------------------------

struct AccuracyRow {
    Target target;
    Family family;
    bool selected = false; // best family of its target by CV
    double cv_r2 = 0;
    RegressionReport test;
    ModelSpec spec;
};

inline std::vector<AccuracyRow> accuracy_rows(const TrainingResult& trained, const Dataset& ds_test, const ConfigSpace& space) {
    std::vector<AccuracyRow> rows;
    for (const auto& [target, tt] : trained) {
        for (std::size_t i = 0; i < tt.families.size(); ++i) {
            const auto& fo = tt.families[i];
            rows.push_back(AccuracyRow{target, fo.family, i == tt.best, fo.cv.mean_score,
                                       evaluate_predictor(fo.model, ds_test, space), fo.cv.best_spec});
        }
    }
    return rows;
}

inline std::string accuracy_csv(std::span<const AccuracyRow> rows) {
    std::string out = "target,family,selected,cv_r2,r2,rmse,mae,sdae,n\n";
    for (const auto& r : rows) {
        out += std::string(to_string(r.target)) + "," + std::string(to_string(r.family)) + "," + (r.selected ? "1" : "0");
        for (double v : {r.cv_r2, r.test.r2, r.test.rmse, r.test.mae, r.test.sdae}) out += "," + detail::format_double(v);
        out += "," + std::to_string(r.test.n) + "\n";
    }
    return out;
}

/// Aligned text: families down, targets across, R2 / RMSE / MAE / SDAE per target.
inline std::string accuracy_table(std::span<const AccuracyRow> rows) {
    std::vector<Target> targets;
    std::vector<Family> families;
    for (const auto& r : rows) {
        if (std::find(targets.begin(), targets.end(), r.target) == targets.end()) targets.push_back(r.target);
        if (std::find(families.begin(), families.end(), r.family) == families.end()) families.push_back(r.family);
    }
    constexpr std::size_t name_w = 15, col_w = 9;
    std::string out = detail::pad("", name_w, false);
    for (Target t : targets) out += " | " + detail::pad(std::string(to_string(t)), 4 * col_w, false);
    out += "\n" + detail::pad("model", name_w, false);
    for (std::size_t i = 0; i < targets.size(); ++i) {
        out += " | ";
        for (const char* h : {"R2", "RMSE", "MAE", "SDAE"}) out += detail::pad(h, col_w);
    }
    out += "\n";
    for (Family f : families) {
        out += detail::pad(std::string(to_string(f)), name_w, false);
        for (Target t : targets) {
            out += " | ";
            auto it = std::find_if(rows.begin(), rows.end(), [&](const auto& r) { return r.family == f && r.target == t; });
            if (it == rows.end()) {
                out += detail::pad("-", 4 * col_w);
                continue;
            }
            const auto& rr = it->test;
            out += detail::pad(detail::fixed(rr.r2, 3) + (it->selected ? "*" : ""), col_w);
            for (double v : {rr.rmse, rr.mae, rr.sdae}) out += detail::pad(detail::fixed(v, 3), col_w);
        }
        out += "\n";
    }
    out += "* family selected by cross-validation\n";
    return out;
}

// ---------------------------------------------------------------------------
// Policy table: one row per rho
// ---------------------------------------------------------------------------

inline std::string policy_csv(std::span<const PolicyReport> reports) {
    std::string out = "rho,avg_vmaf,avg_psnr,vmaf_drop,psnr_drop,enc_savings_pct,dec_savings_pct,total_savings_pct,"
                      "predicted_total_savings_pct\n";
    for (const auto& r : reports) {
        out += detail::format_double(r.rho);
        for (double v : {r.avg_vmaf, r.avg_psnr, r.vmaf_drop, r.psnr_drop, r.enc_savings_pct, r.dec_savings_pct,
                         r.total_savings_pct, r.predicted_total_savings_pct}) {
            out += "," + detail::format_double(v);
        }
        out += "\n";
    }
    return out;
}

inline std::string policy_table(std::span<const PolicyReport> reports) {
    const char* heads[] = {"rho", "avg VMAF", "avg PSNR", "VMAF drop", "PSNR drop", "enc sav%", "dec sav%"};
    constexpr std::size_t w = 11;
    std::string out;
    for (const char* h : heads) out += detail::pad(h, w);
    out += "\n";
    for (const auto& r : reports) {
        out += detail::pad(detail::fixed(r.rho, 2), w);
        for (double v : {r.avg_vmaf, r.avg_psnr, r.vmaf_drop, r.psnr_drop, r.enc_savings_pct, r.dec_savings_pct}) {
            out += detail::pad(detail::fixed(v, 2), w);
        }
        out += "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Distribution summaries per resolution / per QP
// ---------------------------------------------------------------------------

struct Summary {
    double mean = 0, median = 0, q1 = 0, q3 = 0, min = 0, max = 0;
    std::size_t n = 0;
};

/// Quantile with linear interpolation between order statistics (h = (n-1) p).
inline double quantile_sorted(std::span<const double> sorted, double p) {
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline Summary summarize(std::vector<double> v) {
    if (v.empty()) throw Error(ErrorCode::EmptyInput, "nothing to summarize");
    std::sort(v.begin(), v.end());
    Summary s;
    s.n = v.size();
    for (double x : v) s.mean += x;
    s.mean /= static_cast<double>(v.size());
    s.median = quantile_sorted(v, 0.5);
    s.q1 = quantile_sorted(v, 0.25);
    s.q3 = quantile_sorted(v, 0.75);
    s.min = v.front();
    s.max = v.back();
    return s;
}

struct AggregateRow {
    int group = 0; // height or qp
    std::string metric;
    Summary summary;
};

enum class GroupBy { resolution, qp };

inline const std::vector<std::pair<std::string, double MeasurementRecord::*>>& aggregate_metrics() {
    static const std::vector<std::pair<std::string, double MeasurementRecord::*>> m{
        {"enc_energy_wh", &MeasurementRecord::enc_energy}, {"dec_energy_wh", &MeasurementRecord::dec_energy},
        {"enc_time_s", &MeasurementRecord::enc_time},      {"dec_time_s", &MeasurementRecord::dec_time},
        {"bitrate_kbps", &MeasurementRecord::bitrate},     {"psnr_db", &MeasurementRecord::psnr},
        {"vmaf", &MeasurementRecord::vmaf}};
    return m;
}

inline std::vector<AggregateRow> aggregate(const Dataset& ds, GroupBy by) {
    std::map<int, std::vector<const MeasurementRecord*>> groups;
    for (const auto& r : ds.records()) groups[by == GroupBy::resolution ? r.rep.height() : r.rep.qp].push_back(&r);
    std::vector<AggregateRow> rows;
    for (const auto& [key, recs] : groups) {
        for (const auto& [name, field] : aggregate_metrics()) {
            std::vector<double> v;
            for (const auto* r : recs) v.push_back(r->*field);
            rows.push_back(AggregateRow{key, name, summarize(std::move(v))});
        }
    }
    return rows;
}

/// Mean of one metric for every (height, qp) cell, for monotonicity checks.
inline std::map<std::pair<int, int>, double> cell_means(const Dataset& ds, double MeasurementRecord::*field) {
    std::map<std::pair<int, int>, std::pair<double, std::size_t>> acc;
    for (const auto& r : ds.records()) {
        auto& a = acc[{r.rep.height(), r.rep.qp}];
        a.first += r.*field;
        ++a.second;
    }
    std::map<std::pair<int, int>, double> out;
    for (const auto& [k, a] : acc) out[k] = a.first / static_cast<double>(a.second);
    return out;
}

inline std::string aggregate_csv(std::span<const AggregateRow> rows, GroupBy by) {
    std::string out = std::string(by == GroupBy::resolution ? "height" : "qp") + ",metric,mean,median,q1,q3,min,max,n\n";
    for (const auto& r : rows) {
        out += std::to_string(r.group) + "," + r.metric;
        for (double v : {r.summary.mean, r.summary.median, r.summary.q1, r.summary.q3, r.summary.min, r.summary.max}) {
            out += "," + detail::format_double(v);
        }
        out += "," + std::to_string(r.summary.n) + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Anchor analysis plot data
// ---------------------------------------------------------------------------

inline std::string correlation_csv(const CorrelationMatrix& cm) {
    std::string out = "config";
    for (const auto& c : cm.configs) out += "," + to_string(c);
    out += "\n";
    for (std::size_t i = 0; i < cm.dimension(); ++i) {
        out += to_string(cm.configs[i]);
        for (double v : cm.values[i]) out += "," + detail::format_double(v);
        out += "\n";
    }
    return out;
}

inline std::string ranking_csv(std::span<const AnchorRankingRow> rows) {
    std::string out = "height,qp,mean_corr,mean_time_s\n";
    for (const auto& r : rows) {
        out += std::to_string(r.config.height()) + "," + std::to_string(r.config.qp) + ","
             + detail::format_double(r.mean_corr) + "," + detail::format_double(r.mean_time) + "\n";
    }
    return out;
}

inline std::string sweep_csv(std::span<const AnchorSweepRow> rows) {
    std::string out = "anchor,mean_time_s,r2\n";
    for (const auto& r : rows) {
        out += to_string(r.anchor) + "," + detail::format_double(r.mean_anchor_time) + "," + detail::format_double(r.r2) + "\n";
    }
    return out;
}

} // namespace greenladder
