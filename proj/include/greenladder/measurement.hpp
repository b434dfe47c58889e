#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "greenladder/core_model.hpp"
#include "greenladder/error.hpp"
#include "greenladder/random.hpp"

namespace greenladder {

// ---------------------------------------------------------------------------
// Time -> energy proxy
// ---------------------------------------------------------------------------

/// Linear time-to-energy law: energy_wh = avg_power * t / 3600 + intercept.
struct PowerModel {
    double avg_power = 0; // W
    double intercept = 0; // Wh
};

inline double energy_from_time(double seconds, const PowerModel& pm) {
    if (seconds < 0) throw Error(ErrorCode::NegativeTime, std::to_string(seconds));
    if (!(pm.avg_power > 0)) throw Error(ErrorCode::InvalidArgument, "avg_power must be positive");
    return pm.avg_power * seconds / 3600.0 + pm.intercept;
}

/// Least-squares fit of a PowerModel to paired (seconds, Wh) observations.
inline PowerModel fit_power_model(std::span<const double> seconds, std::span<const double> energy_wh) {
    if (seconds.size() != energy_wh.size() || seconds.size() < 2) {
        throw Error(ErrorCode::TooFewSamples, "need at least two paired observations");
    }
    const auto n = static_cast<double>(seconds.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < seconds.size(); ++i) {
        mx += seconds[i] / 3600.0;
        my += energy_wh[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < seconds.size(); ++i) {
        const double dx = seconds[i] / 3600.0 - mx;
        sxy += dx * (energy_wh[i] - my);
        sxx += dx * dx;
    }
    if (sxx == 0) throw Error(ErrorCode::ZeroVariance, "all times are equal");
    const double slope = sxy / sxx;
    return PowerModel{slope, my - slope * mx};
}

// ---------------------------------------------------------------------------
// Providers
// ---------------------------------------------------------------------------

/// Anything that can produce one measurement for a (video, representation).
template <typename P>
concept MeasurementProvider = requires(P& p, std::string_view id, const Representation& rep) {
    { p.measure(id, rep) } -> std::convertible_to<MeasurementRecord>;
};

/// Type-erased provider, for plumbing a runtime choice through the CLI.
class AnyProvider {
public:
    using Fn = std::function<MeasurementRecord(std::string_view, const Representation&)>;

    explicit AnyProvider(Fn fn) : fn_(std::move(fn)) {}

    template <MeasurementProvider P>
    static AnyProvider wrap(P& provider) {
        return AnyProvider([&provider](std::string_view id, const Representation& rep) {
            return MeasurementRecord(provider.measure(id, rep));
        });
    }

    MeasurementRecord measure(std::string_view id, const Representation& rep) { return fn_(id, rep); }

private:
    Fn fn_;
};

/// Encodes and decodes only the anchor representation (lowest resolution,
/// highest QP) and returns its times and quality.
template <MeasurementProvider P>
AnchorMeasurement run_anchor(P& provider, std::string_view video_id, const ConfigSpace& space) {
    MeasurementRecord rec = provider.measure(video_id, space.anchor());
    return anchor_from_record(rec);
}

/// Serves measurements from an existing dataset (replay of a measured ladder).
class DatasetProvider {
public:
    explicit DatasetProvider(const Dataset& ds) : ds_(&ds) {}

    MeasurementRecord measure(std::string_view video_id, const Representation& rep) const {
        const auto* rec = ds_->find(video_id, rep);
        if (rec == nullptr) {
            throw Error(ErrorCode::MissingCell, std::string(video_id) + " " + to_string(rep));
        }
        return *rec;
    }

private:
    const Dataset* ds_;
};

// ---------------------------------------------------------------------------
// Synthetic world
// ---------------------------------------------------------------------------

struct SyntheticWorldParams {
    int n_videos = 100;
    double base_enc_time = 9.5;  // s, anchor encode time of a unit-complexity video
    double pixel_exponent = 0.5;
    double qp_decay = 0.1;
    double power_enc = 200.0;    // W
    double power_dec = 60.0;     // W
    double quality_ceiling = 100.0;
    double noise_sd = 0.05;
    std::uint64_t seed = 42;

    void validate() const {
        auto require = [](bool ok, const char* field) {
            if (!ok) throw Error(ErrorCode::InvariantViolation, field);
        };
        require(n_videos > 0, "n_videos");
        require(base_enc_time > 0, "base_enc_time");
        require(pixel_exponent > 0, "pixel_exponent");
        require(qp_decay > 0, "qp_decay");
        require(power_enc > 0, "power_enc");
        require(power_dec > 0, "power_dec");
        require(quality_ceiling > 0, "quality_ceiling");
        require(noise_sd >= 0 && noise_sd < 0.2, "noise_sd");
    }
};

/// Ground-truth law of the synthetic world.
///
/// With P = width*height, P_min/P_max the ladder extremes, qp_max the highest
/// ladder QP, c the per-video complexity and e1, e2 per-cell noise draws:
///
///   c          ~ U[0.5, 2.0]           Rng(mix_seed(seed, fnv1a(video_id))).uniform
///   e1, e2     ~ N(0, noise_sd)        Rng(mix_seed(that, 64*height + qp)), clamped to [-0.5, 0.5]
///   s_enc      = (P / P_min)^pixel_exponent
///   s_dec      = (P / P_min)^(0.8 * pixel_exponent)
///   g_qp       = exp(-qp_decay * (qp - qp_max))
///   enc_time   = base_enc_time * c * s_enc * g_qp * (1 + e1)
///   dec_time   = 0.1 * base_enc_time * c * s_dec * g_qp * (1 + e2)
///   enc_energy = power_enc * enc_time / 3600
///   dec_energy = power_dec * dec_time / 3600
///   vmaf       = clamp(ceiling * (1 - 0.9 (qp/63)^2) * (1 - 0.25 (1 - P/P_max)), 0, 100)
///   psnr       = max(1, 0.5 * ceiling * (1 - 0.6 qp/63) * (1 - 0.1 (1 - P/P_max)) - 2 ln c)
///   bitrate    = 150 * c * (P / P_min)^0.75 * exp(0.12 * (qp_max - qp))
class SyntheticProvider {
public:
    static constexpr double kComplexityMin = 0.5;
    static constexpr double kComplexityMax = 2.0;
    static constexpr double kDecTimeFraction = 0.1;
    static constexpr double kDecExponentFactor = 0.8;
    static constexpr double kNoiseClamp = 0.5;
    static constexpr double kAnchorBitrateKbps = 150.0;
    static constexpr double kBitratePixelExponent = 0.75;
    static constexpr double kBitrateQpDecay = 0.12;

    SyntheticProvider(SyntheticWorldParams params, ConfigSpace space)
        : params_(params), space_(std::move(space)) {
        params_.validate();
    }

    const SyntheticWorldParams& params() const { return params_; }
    const ConfigSpace& space() const { return space_; }

    std::uint64_t video_seed(std::string_view video_id) const {
        return mix_seed(params_.seed, hash_string(video_id));
    }

    double complexity(std::string_view video_id) const {
        Rng rng(video_seed(video_id));
        return rng.uniform(kComplexityMin, kComplexityMax);
    }

    MeasurementRecord measure(std::string_view video_id, const Representation& rep) const {
        const double c = complexity(video_id);
        Rng noise(mix_seed(video_seed(video_id), static_cast<std::uint64_t>(64 * rep.height() + rep.qp)));
        const double e1 = std::clamp(noise.normal(0.0, params_.noise_sd), -kNoiseClamp, kNoiseClamp);
        const double e2 = std::clamp(noise.normal(0.0, params_.noise_sd), -kNoiseClamp, kNoiseClamp);

        const double p = static_cast<double>(rep.resolution.pixels());
        const double p_min = static_cast<double>(space_.min_resolution().pixels());
        const double p_max = static_cast<double>(space_.max_resolution().pixels());
        const double qp = rep.qp;
        const double qp_max = space_.max_qp();
        const double g_qp = std::exp(-params_.qp_decay * (qp - qp_max));

        MeasurementRecord r;
        r.video_id = std::string(video_id);
        r.rep = rep;
        r.enc_time = params_.base_enc_time * c * std::pow(p / p_min, params_.pixel_exponent) * g_qp * (1.0 + e1);
        r.dec_time = kDecTimeFraction * params_.base_enc_time * c
                   * std::pow(p / p_min, kDecExponentFactor * params_.pixel_exponent) * g_qp * (1.0 + e2);
        r.enc_energy = params_.power_enc * r.enc_time / 3600.0;
        r.dec_energy = params_.power_dec * r.dec_time / 3600.0;
        r.vmaf = std::clamp(params_.quality_ceiling * (1.0 - 0.9 * (qp / 63.0) * (qp / 63.0))
                                * (1.0 - 0.25 * (1.0 - p / p_max)),
                            0.0, 100.0);
        r.psnr = std::max(1.0, 0.5 * params_.quality_ceiling * (1.0 - 0.6 * qp / 63.0)
                                   * (1.0 - 0.1 * (1.0 - p / p_max))
                                   - 2.0 * std::log(c));
        r.bitrate = kAnchorBitrateKbps * c * std::pow(p / p_min, kBitratePixelExponent)
                  * std::exp(kBitrateQpDecay * (qp_max - qp));
        return r;
    }

private:
    SyntheticWorldParams params_;
    ConfigSpace space_;
};

/// "v000", "v001", ... zero-padded to at least three digits.
inline std::string synthetic_video_id(int index, int n_videos) {
    int width = 3;
    for (int n = n_videos - 1; n >= 1000; n /= 10) ++width;
    std::string digits = std::to_string(index);
    if (digits.size() < static_cast<std::size_t>(width)) digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
    return "v" + digits;
}

inline Dataset synth_generate(const SyntheticWorldParams& params, const ConfigSpace& space) {
    SyntheticProvider provider(params, space);
    std::vector<MeasurementRecord> records;
    records.reserve(static_cast<std::size_t>(params.n_videos) * space.size());
    for (int v = 0; v < params.n_videos; ++v) {
        const auto id = synthetic_video_id(v, params.n_videos);
        for (const auto& rep : space.representations()) records.push_back(provider.measure(id, rep));
    }
    return Dataset(std::move(records));
}

} // namespace greenladder
