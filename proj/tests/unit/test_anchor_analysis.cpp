#include <gtest/gtest.h>

#include <cmath>

#include "greenladder/anchor_analysis.hpp"
#include "support.hpp"

using namespace greenladder;

namespace {

Dataset hand_built(const ConfigSpace& space, const std::vector<std::vector<double>>& times) {
    // times[config][video]
    std::vector<MeasurementRecord> recs;
    const auto reps = space.representations();
    for (std::size_t c = 0; c < reps.size(); ++c) {
        for (std::size_t v = 0; v < times[c].size(); ++v) {
            MeasurementRecord r;
            r.video_id = "h" + std::to_string(v);
            r.rep = reps[c];
            r.enc_time = times[c][v];
            r.psnr = 40;
            recs.push_back(r);
        }
    }
    return Dataset(std::move(recs));
}

} // namespace

TEST(Pearson, ClosedFormOnThreeVideos) {
    const std::vector<double> a{1, 2, 4}, b{2, 1, 7};
    // Means 7/3 and 10/3; deviations (-4/3, -1/3, 5/3) and (-4/3, -7/3, 11/3).
    const double sab = (16.0 + 7.0 + 55.0) / 9.0, saa = (16.0 + 1.0 + 25.0) / 9.0, sbb = (16.0 + 49.0 + 121.0) / 9.0;
    EXPECT_NEAR(pearson(a, b), sab / std::sqrt(saa * sbb), 1e-12);
}

TEST(Pearson, AffineInvariance) {
    Rng rng(1);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> a(10), b(10), c(10);
        for (std::size_t i = 0; i < 10; ++i) {
            a[i] = rng.uniform(0, 10);
            b[i] = rng.uniform(0, 10);
        }
        const double s = rng.uniform(0.1, 100), o = rng.uniform(-50, 50);
        for (std::size_t i = 0; i < 10; ++i) c[i] = s * a[i] + o;
        EXPECT_NEAR(pearson(c, b), pearson(a, b), 1e-10);
    }
}

TEST(Pearson, ConstantSeriesIsZeroVariance) {
    EXPECT_THROW(pearson(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), Error);
}

TEST(Correlation, MatrixShapeAndDiagonal) {
    const auto ds = greenladder::testing::synth(12);
    const auto cm = pairwise_correlation(ds, ConfigSpace::paper_ladder());
    ASSERT_EQ(cm.dimension(), 42u);
    for (std::size_t i = 0; i < 42; ++i) {
        EXPECT_EQ(cm.values[i][i], 1.0);
        for (std::size_t j = 0; j < 42; ++j) {
            EXPECT_EQ(cm.values[i][j], cm.values[j][i]);
            EXPECT_LE(std::abs(cm.values[i][j]), 1.0);
        }
    }
}

TEST(Correlation, ProportionalTimesGiveOne) {
    const ConfigSpace space({360, 720}, {22});
    const auto ds = hand_built(space, {{1, 2, 5}, {3, 6, 15}});
    const auto cm = pairwise_correlation(ds, space);
    EXPECT_NEAR(cm.values[0][1], 1.0, 1e-12);
}

TEST(Correlation, HandBuiltMatchesClosedForm) {
    const ConfigSpace space({360, 720}, {22});
    const auto ds = hand_built(space, {{1, 2, 4}, {2, 1, 7}});
    const double sab = 78.0 / 9.0, saa = 42.0 / 9.0, sbb = 186.0 / 9.0;
    EXPECT_NEAR(pairwise_correlation(ds, space).values[0][1], sab / std::sqrt(saa * sbb), 1e-12);
}

TEST(Correlation, MissingCell) {
    const ConfigSpace space({360, 720}, {22});
    const auto ds = hand_built(ConfigSpace({360}, {22}), {{1, 2, 4}});
    EXPECT_THROW(pairwise_correlation(ds, space), Error);
}

TEST(Ranking, TwoConfigsShareTheOffDiagonal) {
    const ConfigSpace space({360, 720}, {22});
    const auto ds = hand_built(space, {{1, 2, 4}, {2, 1, 7}});
    const auto cm = pairwise_correlation(ds, space);
    const auto rows = anchor_ranking(cm, ds);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].mean_corr, cm.values[0][1]);
    EXPECT_EQ(rows[1].mean_corr, cm.values[0][1]);
    EXPECT_NEAR(rows[0].mean_time, 7.0 / 3.0, 1e-12);
}

TEST(Ranking, NoiselessWorldCorrelatesPerfectlyAndRanksByTime) {
    const auto ds = greenladder::testing::synth(15, 0.0);
    const auto cm = pairwise_correlation(ds, ConfigSpace::paper_ladder());
    for (const auto& row : cm.values) {
        for (double v : row) EXPECT_NEAR(v, 1.0, 1e-12);
    }
    const auto rows = anchor_ranking(cm, ds);
    for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LE(rows[i - 1].mean_time, rows[i].mean_time);
    EXPECT_EQ(rows.front().config, Representation::make(360, 47));
    EXPECT_GT(rows.front().mean_time, 0.0);
    EXPECT_FALSE(std::isnan(rows.front().mean_corr));
}

TEST(Sweep, DefaultCandidates) {
    const auto c = default_sweep_candidates(ConfigSpace::paper_ladder());
    ASSERT_EQ(c.size(), 6u);
    EXPECT_EQ(c[0], Representation::make(360, 17));
    EXPECT_EQ(c[1], Representation::make(360, 47));
    EXPECT_EQ(c[2], Representation::make(1080, 17));
    EXPECT_EQ(c[5], Representation::make(2160, 47));
}

TEST(Sweep, TwoCandidatesOnNoiselessWorld) {
    const auto ds = greenladder::testing::synth(20, 0.0);
    const std::vector<Representation> cands{Representation::make(360, 47), Representation::make(2160, 17)};
    SweepOptions opt;
    opt.family = Family::gbm_leafwise;
    const auto rows = anchor_sweep(ds, cands, 42, opt);
    ASSERT_EQ(rows.size(), 2u);
    for (const auto& r : rows) {
        EXPECT_TRUE(std::isfinite(r.r2));
        EXPECT_GT(r.r2, 0.99) << to_string(r.anchor);
    }
    EXPECT_LT(rows[0].mean_anchor_time, rows[1].mean_anchor_time);
}

TEST(Sweep, CandidateOutsideLadder) {
    const auto ds = greenladder::testing::synth(6, 0.0);
    const std::vector<Representation> cands{Representation::make(480, 47)};
    EXPECT_THROW(anchor_sweep(ds, cands, 1), Error);
}
