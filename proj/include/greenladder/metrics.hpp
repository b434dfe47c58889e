#pragma once

#include <cmath>
#include <span>
#include <string>

#include <json.hpp>

#include "greenladder/error.hpp"

namespace greenladder {

namespace detail {
inline void check_pair(std::span<const double> y, std::span<const double> yhat) {
    if (y.size() != yhat.size()) throw Error(ErrorCode::InvalidArgument, "length mismatch");
    if (y.empty()) throw Error(ErrorCode::EmptyInput, "no samples");
}
} // namespace detail

/// 1 - SS_res / SS_tot.
inline double r_squared(std::span<const double> y, std::span<const double> yhat) {
    detail::check_pair(y, yhat);
    if (y.size() < 2) throw Error(ErrorCode::TooFewSamples, "r_squared needs at least two samples");
    double mean = 0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double ss_res = 0, ss_tot = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        ss_res += (y[i] - yhat[i]) * (y[i] - yhat[i]);
        ss_tot += (y[i] - mean) * (y[i] - mean);
    }
    if (ss_tot == 0) throw Error(ErrorCode::ConstantTruth, "ground truth has zero variance");
    return 1.0 - ss_res / ss_tot;
}

inline double mae(std::span<const double> y, std::span<const double> yhat) {
    detail::check_pair(y, yhat);
    double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) s += std::abs(y[i] - yhat[i]);
    return s / static_cast<double>(y.size());
}

inline double rmse(std::span<const double> y, std::span<const double> yhat) {
    detail::check_pair(y, yhat);
    double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - yhat[i]) * (y[i] - yhat[i]);
    return std::sqrt(s / static_cast<double>(y.size()));
}

/// Population standard deviation of |y - yhat|.
inline double sdae(std::span<const double> y, std::span<const double> yhat) {
    const double m = mae(y, yhat);
    double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = std::abs(y[i] - yhat[i]) - m;
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(y.size()));
}

struct RegressionReport {
    double r2 = 0;
    double rmse = 0;
    double mae = 0;
    double sdae = 0;
    std::size_t n = 0;
};

inline RegressionReport regression_report(std::span<const double> y, std::span<const double> yhat) {
    return RegressionReport{r_squared(y, yhat), rmse(y, yhat), mae(y, yhat), sdae(y, yhat), y.size()};
}

inline void to_json(nlohmann::json& j, const RegressionReport& r) {
    j = {{"r2", r.r2}, {"rmse", r.rmse}, {"mae", r.mae}, {"sdae", r.sdae}, {"n", r.n}};
}

inline double energy_savings_pct(double baseline_wh, double value_wh) {
    if (!(baseline_wh > 0)) throw Error(ErrorCode::NonPositiveBaseline, std::to_string(baseline_wh));
    return 100.0 * (baseline_wh - value_wh) / baseline_wh;
}

inline double quality_drop(double baseline_q, double q) { return baseline_q - q; }

/// One row of the rho sweep. Drops and savings are relative to rho = 0.
struct PolicyReport {
    double rho = 0;
    double avg_vmaf = 0;
    double avg_psnr = 0;
    double vmaf_drop = 0;
    double psnr_drop = 0;
    double enc_savings_pct = 0;
    double dec_savings_pct = 0;
    // Not in the classic table: combined enc+dec savings, measured and predicted.
    double total_savings_pct = 0;
    double predicted_total_savings_pct = 0;
    std::size_t n_videos = 0;
};

inline void to_json(nlohmann::json& j, const PolicyReport& r) {
    j = {{"rho", r.rho},
         {"avg_vmaf", r.avg_vmaf},
         {"avg_psnr", r.avg_psnr},
         {"vmaf_drop", r.vmaf_drop},
         {"psnr_drop", r.psnr_drop},
         {"enc_savings_pct", r.enc_savings_pct},
         {"dec_savings_pct", r.dec_savings_pct},
         {"total_savings_pct", r.total_savings_pct},
         {"predicted_total_savings_pct", r.predicted_total_savings_pct},
         {"n_videos", r.n_videos}};
}

} // namespace greenladder
