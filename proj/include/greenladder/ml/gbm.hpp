#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "greenladder/random.hpp"
#include "greenladder/ml/tree.hpp"

namespace greenladder::ml {

struct GbmParams {
    int n_trees = 100;
    double learning_rate = 0.1;
    double subsample = 1.0;
    TreeParams tree;
    std::uint64_t seed = 0;
};

/// Squared-error gradient boosting: F_0 = mean(y), each round fits a tree to
/// the residuals y - F and adds learning_rate times its output.
class GradientBoosting {
public:
    GradientBoosting() = default;
    GradientBoosting(double base, double learning_rate, std::vector<RegressionTree> trees)
        : base_(base), learning_rate_(learning_rate), trees_(std::move(trees)) {}

    /// `train_mse`, when given, receives the training MSE after every round
    /// (index 0 is the constant model).
    static GradientBoosting fit(std::span<const FeatureRow> X, std::span<const double> y, const GbmParams& params,
                                std::vector<double>* train_mse = nullptr) {
        const std::size_t n = X.size();
        if (n == 0 || n != y.size()) throw Error(ErrorCode::TooFewSamples, "boosting needs paired samples");
        if (params.n_trees < 0) throw Error(ErrorCode::InvalidArgument, "n_trees must be non-negative");
        if (!(params.subsample > 0 && params.subsample <= 1)) throw Error(ErrorCode::InvalidArgument, "subsample");

        const double base = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
        std::vector<double> F(n, base), residual(n);
        std::vector<RegressionTree> trees;
        trees.reserve(static_cast<std::size_t>(params.n_trees));

        auto mse = [&] {
            double s = 0;
            for (std::size_t i = 0; i < n; ++i) s += (y[i] - F[i]) * (y[i] - F[i]);
            return s / static_cast<double>(n);
        };
        if (train_mse) train_mse->assign(1, mse());

        const auto k = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(params.subsample * static_cast<double>(n))));
        std::vector<std::size_t> rows(n);
        for (int t = 0; t < params.n_trees; ++t) {
            for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - F[i];
            std::iota(rows.begin(), rows.end(), std::size_t{0});
            std::span<const std::size_t> sample(rows);
            if (k < n) {
                Rng rng(mix_seed(params.seed, static_cast<std::uint64_t>(t)));
                rng.shuffle(rows);
                std::sort(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(k));
                sample = sample.first(k);
            }
            trees.push_back(fit_tree(X, residual, sample, params.tree));
            for (std::size_t i = 0; i < n; ++i) F[i] += params.learning_rate * trees.back().predict(X[i]);
            if (train_mse) train_mse->push_back(mse());
        }
        return GradientBoosting(base, params.learning_rate, std::move(trees));
    }

    double predict(const FeatureRow& x) const {
        double s = base_;
        for (const auto& t : trees_) s += learning_rate_ * t.predict(x);
        return s;
    }

    double base() const { return base_; }
    double learning_rate() const { return learning_rate_; }
    const std::vector<RegressionTree>& trees() const { return trees_; }

private:
    double base_ = 0;
    double learning_rate_ = 0.1;
    std::vector<RegressionTree> trees_;
};

} // namespace greenladder::ml
