#pragma once

#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "greenladder/random.hpp"
#include "greenladder/ml/tree.hpp"

namespace greenladder::ml {

struct ForestParams {
    int n_trees = 100;
    TreeParams tree;
    bool bootstrap = true;
    std::uint64_t seed = 0;
};

/// Bagged regression trees; the prediction is the arithmetic mean over trees.
class RandomForest {
public:
    RandomForest() = default;
    explicit RandomForest(std::vector<RegressionTree> trees) : trees_(std::move(trees)) {}

    static RandomForest fit(std::span<const FeatureRow> X, std::span<const double> y, const ForestParams& params) {
        if (X.empty() || X.size() != y.size()) throw Error(ErrorCode::TooFewSamples, "forest needs paired samples");
        if (params.n_trees < 1) throw Error(ErrorCode::InvalidArgument, "n_trees must be positive");
        std::vector<RegressionTree> trees;
        trees.reserve(static_cast<std::size_t>(params.n_trees));
        std::vector<std::size_t> sample(X.size());
        for (int t = 0; t < params.n_trees; ++t) {
            if (params.bootstrap) {
                Rng rng(mix_seed(params.seed, static_cast<std::uint64_t>(t)));
                for (auto& s : sample) s = rng.index(X.size());
            } else {
                std::iota(sample.begin(), sample.end(), std::size_t{0});
            }
            trees.push_back(fit_tree(X, y, sample, params.tree));
        }
        return RandomForest(std::move(trees));
    }

    double predict(const FeatureRow& x) const {
        double s = 0;
        for (const auto& t : trees_) s += t.predict(x);
        return s / static_cast<double>(trees_.size());
    }

    const std::vector<RegressionTree>& trees() const { return trees_; }

private:
    std::vector<RegressionTree> trees_;
};

} // namespace greenladder::ml
