#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "greenladder/error.hpp"

namespace greenladder::ml {

inline constexpr std::size_t kNumFeatures = 3;

/// Model input: (anchor value, height, qp) as doubles.
using FeatureRow = std::array<double, kNumFeatures>;

inline void require_finite(std::span<const FeatureRow> X) {
    for (const auto& row : X) {
        for (double v : row) {
            if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "feature value is not finite");
        }
    }
}

inline void require_finite(std::span<const double> y) {
    for (double v : y) {
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "target value is not finite");
    }
}

/// Per-feature standardization (population sd). Constant features keep sd = 1.
struct Scaler {
    FeatureRow mean{0.0, 0.0, 0.0};
    FeatureRow sd{1.0, 1.0, 1.0};

    static Scaler identity() { return {}; }

    static Scaler fit(std::span<const FeatureRow> X) {
        Scaler s;
        if (X.empty()) return s;
        const auto n = static_cast<double>(X.size());
        for (std::size_t f = 0; f < kNumFeatures; ++f) {
            double m = 0;
            for (const auto& row : X) m += row[f];
            m /= n;
            double v = 0;
            for (const auto& row : X) v += (row[f] - m) * (row[f] - m);
            const double sd = std::sqrt(v / n);
            s.mean[f] = m;
            s.sd[f] = sd > 0 ? sd : 1.0;
        }
        return s;
    }

    FeatureRow apply(const FeatureRow& x) const {
        FeatureRow out;
        for (std::size_t f = 0; f < kNumFeatures; ++f) out[f] = (x[f] - mean[f]) / sd[f];
        return out;
    }

    std::vector<FeatureRow> apply(std::span<const FeatureRow> X) const {
        std::vector<FeatureRow> out;
        out.reserve(X.size());
        for (const auto& x : X) out.push_back(apply(x));
        return out;
    }

    friend bool operator==(const Scaler&, const Scaler&) = default;
};

} // namespace greenladder::ml
