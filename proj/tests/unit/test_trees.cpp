#include <gtest/gtest.h>

#include <numeric>

#include "greenladder/ml/forest.hpp"
#include "greenladder/ml/gbm.hpp"
#include "greenladder/ml/tree.hpp"
#include "greenladder/predictor.hpp"
#include "greenladder/random.hpp"

using namespace greenladder;
using ml::FeatureRow;

namespace {

struct Data {
    std::vector<FeatureRow> X;
    std::vector<double> y;
};

Data wavy(std::uint64_t seed, std::size_t n = 200, double noise = 0.1) {
    Rng rng(seed);
    Data d;
    for (std::size_t i = 0; i < n; ++i) {
        FeatureRow x{rng.uniform(0, 10), rng.uniform(0, 10), rng.uniform(0, 10)};
        d.X.push_back(x);
        d.y.push_back(std::sin(x[0]) * x[1] + 0.3 * x[2] + rng.normal(0, noise));
    }
    return d;
}

double mse(const Data& d, auto&& model) {
    double s = 0;
    for (std::size_t i = 0; i < d.X.size(); ++i) {
        const double e = model.predict(d.X[i]) - d.y[i];
        s += e * e;
    }
    return s / static_cast<double>(d.X.size());
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

} // namespace

TEST(Tree, DepthZeroIsTheMean) {
    const auto d = wavy(1, 50);
    ml::TreeParams p;
    p.max_depth = 0;
    const auto t = ml::fit_tree(d.X, d.y, p);
    EXPECT_EQ(t.leaf_count(), 1u);
    EXPECT_NEAR(t.predict(d.X[0]), mean(d.y), 1e-12);
}

TEST(Tree, UnlimitedTreeInterpolatesDistinctPoints) {
    const auto d = wavy(2, 64);
    const auto t = ml::fit_tree(d.X, d.y, ml::TreeParams{});
    for (std::size_t i = 0; i < d.X.size(); ++i) EXPECT_NEAR(t.predict(d.X[i]), d.y[i], 1e-9);
}

TEST(Tree, RespectsDepthAndLeafLimits) {
    const auto d = wavy(3, 300);
    ml::TreeParams p;
    p.max_depth = 3;
    p.min_samples_leaf = 7;
    const auto t = ml::fit_tree(d.X, d.y, p);
    EXPECT_LE(t.depth(), 3);
    EXPECT_LE(t.leaf_count(), 8u);
    // Count training samples per leaf through the tree.
    std::map<int, int> per_leaf;
    for (const auto& x : d.X) {
        int i = 0;
        while (!t.nodes()[static_cast<std::size_t>(i)].is_leaf()) {
            const auto& n = t.nodes()[static_cast<std::size_t>(i)];
            i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
        }
        ++per_leaf[i];
    }
    for (const auto& [leaf, count] : per_leaf) EXPECT_GE(count, 7) << "leaf " << leaf;
}

TEST(Tree, BestFirstHonoursLeafBudget) {
    const auto d = wavy(4, 400);
    ml::TreeParams p;
    p.best_first = true;
    p.max_leaves = 12;
    const auto t = ml::fit_tree(d.X, d.y, p);
    EXPECT_EQ(t.leaf_count(), 12u);
}

TEST(Tree, ConstantTargetMakesOneLeaf) {
    const auto d = wavy(5, 30);
    std::vector<double> y(d.y.size(), 4.0);
    EXPECT_EQ(ml::fit_tree(d.X, y, ml::TreeParams{}).leaf_count(), 1u);
}

TEST(Forest, PredictionIsMeanOfTrees) {
    const auto d = wavy(6, 120);
    ml::ForestParams p;
    p.n_trees = 7;
    p.tree.max_depth = 4;
    p.seed = 9;
    const auto f = ml::RandomForest::fit(d.X, d.y, p);
    ASSERT_EQ(f.trees().size(), 7u);
    for (std::size_t i = 0; i < 20; ++i) {
        double s = 0;
        for (const auto& t : f.trees()) s += t.predict(d.X[i]);
        EXPECT_NEAR(f.predict(d.X[i]), s / 7.0, 1e-12);
    }
}

TEST(Forest, SingleDepthZeroTreeWithoutBootstrapIsTheMean) {
    const auto d = wavy(7, 80);
    ml::ForestParams p;
    p.n_trees = 1;
    p.tree.max_depth = 0;
    p.bootstrap = false;
    const auto f = ml::RandomForest::fit(d.X, d.y, p);
    for (const auto& x : d.X) EXPECT_NEAR(f.predict(x), mean(d.y), 1e-12);
}

TEST(Forest, SeededAndDeterministic) {
    const auto d = wavy(8, 100);
    ml::ForestParams p;
    p.n_trees = 5;
    p.seed = 3;
    const auto a = ml::RandomForest::fit(d.X, d.y, p), b = ml::RandomForest::fit(d.X, d.y, p);
    for (std::size_t t = 0; t < 5; ++t) EXPECT_EQ(a.trees()[t].nodes(), b.trees()[t].nodes());
    p.seed = 4;
    const auto c = ml::RandomForest::fit(d.X, d.y, p);
    EXPECT_NE(a.trees()[0].nodes(), c.trees()[0].nodes());
}

TEST(Forest, BeatsSingleShallowTree) {
    const auto train = wavy(9, 400), test = wavy(10, 400);
    ml::ForestParams p;
    p.n_trees = 50;
    p.seed = 1;
    ml::TreeParams shallow;
    shallow.max_depth = 2;
    EXPECT_LT(mse(test, ml::RandomForest::fit(train.X, train.y, p)), mse(test, ml::fit_tree(train.X, train.y, shallow)));
}

TEST(Gbm, TrainingMseNonIncreasingPerRound) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto d = wavy(seed, 200);
        for (bool leafwise : {false, true}) {
            ml::GbmParams p;
            p.n_trees = 200;
            p.learning_rate = 0.1;
            p.tree.max_depth = leafwise ? -1 : 3;
            p.tree.best_first = leafwise;
            p.tree.max_leaves = leafwise ? 31 : -1;
            p.tree.min_samples_leaf = leafwise ? 20 : 1;
            std::vector<double> curve;
            ml::GradientBoosting::fit(d.X, d.y, p, &curve);
            ASSERT_EQ(curve.size(), 201u);
            for (std::size_t r = 1; r < curve.size(); ++r) {
                EXPECT_LE(curve[r], curve[r - 1] * (1 + 1e-12) + 1e-15) << "round " << r;
            }
        }
    }
}

TEST(Gbm, BeatsTheMeanPredictor) {
    const auto d = wavy(21, 200);
    ml::GbmParams p;
    p.n_trees = 200;
    p.learning_rate = 0.1;
    p.tree.max_depth = 3;
    const auto m = ml::GradientBoosting::fit(d.X, d.y, p);
    const double mu = mean(d.y);
    double base = 0;
    for (double v : d.y) base += (v - mu) * (v - mu);
    base /= static_cast<double>(d.y.size());
    EXPECT_LT(std::sqrt(mse(d, m)), std::sqrt(base));
}

TEST(Gbm, SubsampleIsSeeded) {
    const auto d = wavy(22, 150);
    ml::GbmParams p;
    p.n_trees = 20;
    p.subsample = 0.8;
    p.tree.max_depth = 3;
    p.seed = 5;
    const auto a = ml::GradientBoosting::fit(d.X, d.y, p), b = ml::GradientBoosting::fit(d.X, d.y, p);
    for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(a.predict(d.X[i]), b.predict(d.X[i]));
}

TEST(Gbm, ZeroRoundsIsTheMean) {
    const auto d = wavy(23, 40);
    ml::GbmParams p;
    p.n_trees = 0;
    const auto m = ml::GradientBoosting::fit(d.X, d.y, p);
    EXPECT_NEAR(m.predict(d.X[0]), mean(d.y), 1e-12);
}

TEST(TreeFamilies, PersistedModelsPredictIdentically) {
    const auto d = wavy(30, 150);
    std::vector<FeatureVector> X;
    for (const auto& r : d.X) X.push_back(FeatureVector{r[0], 360 + static_cast<int>(r[1] * 100), 17 + static_cast<int>(r[2] * 3)});
    for (const ModelSpec& spec :
         {ModelSpec{Family::random_forest, {{"n_trees", 10}, {"d_max", kNone}, {"min_samples_split", 2}, {"min_samples_leaf", 1}}, 3},
          ModelSpec{Family::gbm_depthwise, {{"n_trees", 30}, {"d_max", 3}, {"eta", 0.1}, {"subsample", 0.8}}, 3},
          ModelSpec{Family::gbm_leafwise, {{"n_trees", 30}, {"d_max", kNone}, {"eta", 0.1}, {"num_leaves", 31}}, 3},
          ModelSpec{Family::mlp, {{"h_size", 16}, {"h_num", 2}, {"eta", 0.01}}, 3},
          ModelSpec{Family::ridge, {{"alpha", 1.0}}, 3}}) {
        const auto p = fit(spec, X, d.y, Target::vmaf);
        const auto back = predictor_from_json(nlohmann::json::parse(to_json(p).dump()));
        EXPECT_EQ(back.target, Target::vmaf);
        EXPECT_EQ(back.spec.family, spec.family);
        const auto a = predict(p, X), b = predict(back, X);
        for (std::size_t i = 0; i < a.size(); ++i) ASSERT_EQ(a[i], b[i]) << describe(spec);
    }
}
