#include <gtest/gtest.h>

#include <set>

#include "greenladder/core_model.hpp"
#include "support.hpp"

using namespace greenladder;
using greenladder::testing::TempDir;

namespace {

MeasurementRecord record(std::string id, int h, int qp, double vmaf = 80) {
    MeasurementRecord r;
    r.video_id = std::move(id);
    r.rep = Representation::make(h, qp);
    r.enc_time = 10;
    r.enc_energy = 0.5;
    r.dec_time = 1;
    r.dec_energy = 0.02;
    r.bitrate = 1500;
    r.psnr = 40;
    r.vmaf = vmaf;
    return r;
}

Dataset random_dataset(Rng& rng) {
    std::vector<MeasurementRecord> recs;
    const int videos = 1 + static_cast<int>(rng.index(5));
    for (int v = 0; v < videos; ++v) {
        for (int h : {360, 720, 1080}) {
            for (int qp : {22, 37}) {
                if (rng.uniform01() < 0.3) continue;
                MeasurementRecord r;
                r.video_id = "vid_" + std::to_string(v);
                r.rep = Representation::make(h, qp);
                r.enc_time = rng.uniform(0, 1000);
                r.enc_energy = rng.uniform(0, 50) * 1e-3;
                r.dec_time = rng.uniform(0, 20);
                r.dec_energy = rng.uniform(1e-9, 1);
                r.bitrate = rng.uniform(10, 50000);
                r.psnr = rng.uniform(20, 60);
                r.vmaf = rng.uniform(0, 100);
                recs.push_back(r);
            }
        }
    }
    return Dataset(std::move(recs));
}

} // namespace

TEST(Resolution, WidthFollowsSixteenByNine) {
    EXPECT_EQ(Resolution::from_height(360).width, 640);
    EXPECT_EQ(Resolution::from_height(1080).width, 1920);
    EXPECT_EQ(Resolution::from_height(2160).width, 3840);
    EXPECT_EQ(Resolution::from_height(540).width, 960);
}

TEST(Representation, RejectsQpOutOfRange) {
    EXPECT_THROW(Representation::make(360, 64), Error);
    EXPECT_THROW(Representation::make(360, -1), Error);
    EXPECT_NO_THROW(Representation::make(360, 0));
}

TEST(ConfigSpace, RequiresAscendingValues) {
    EXPECT_THROW(ConfigSpace({720, 360}, {22}), Error);
    EXPECT_THROW(ConfigSpace({360}, {22, 22}), Error);
    EXPECT_THROW(ConfigSpace({}, {22}), Error);
}

TEST(ConfigSpace, PaperLadderShape) {
    const auto s = ConfigSpace::paper_ladder();
    EXPECT_EQ(s.size(), 42u);
    EXPECT_EQ(s.anchor(), Representation::make(360, 47));
}

TEST(ConfigSpace, SingleCellIsItsOwnAnchor) {
    const ConfigSpace s({720}, {30});
    EXPECT_EQ(s.anchor(), Representation::make(720, 30));
}

TEST(ConfigSpace, AnchorMatchesExhaustiveScan) {
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        std::set<int> hs, qs;
        const auto nh = 1 + rng.index(6), nq = 1 + rng.index(8);
        while (hs.size() < nh) hs.insert(100 + static_cast<int>(rng.index(2000)));
        while (qs.size() < nq) qs.insert(static_cast<int>(rng.index(64)));
        const ConfigSpace s({hs.begin(), hs.end()}, {qs.begin(), qs.end()});
        Representation best = s.representations().front();
        for (const auto& r : s.representations()) {
            if (r.height() < best.height() || (r.height() == best.height() && r.qp > best.qp)) best = r;
        }
        EXPECT_EQ(s.anchor(), best);
    }
}

TEST(Dataset, RejectsDuplicates) {
    EXPECT_THROW(Dataset({record("a", 360, 22), record("a", 360, 22)}), Error);
}

TEST(Dataset, FindsRecords) {
    const Dataset ds({record("b", 720, 22), record("a", 360, 22), record("a", 360, 47)});
    EXPECT_EQ(ds.video_ids(), (std::vector<std::string>{"a", "b"}));
    ASSERT_NE(ds.find("a", 360, 47), nullptr);
    EXPECT_EQ(ds.find("a", 360, 47)->rep.qp, 47);
    EXPECT_EQ(ds.find("b", 360, 22), nullptr);
}

TEST(Csv, TwoRowFileLoads) {
    TempDir dir("csv2");
    greenladder::testing::spit(dir / "d.csv", std::string(kCsvHeader) + "\n"
                                                  "v1,360,47,9.5,0.5,1,0.02,150,40,80\n"
                                                  "v1,720,47,12,0.7,1.2,0.03,300,42,85\n");
    const auto ds = load_dataset(dir / "d.csv");
    EXPECT_EQ(ds.size(), 2u);
    EXPECT_DOUBLE_EQ(ds.find("v1", 720, 47)->enc_time, 12.0);
}

TEST(Csv, VmafAboveHundredIsInvariantViolation) {
    const std::string text = std::string(kCsvHeader) + "\nv1,360,47,9.5,0.5,1,0.02,150,40,101\n";
    try {
        parse_csv(text);
        FAIL() << "expected InvariantViolation";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvariantViolation);
        EXPECT_NE(e.detail().find("vmaf"), std::string::npos);
    }
}

TEST(Csv, MalformedAndMissingHeader) {
    try {
        parse_csv("video_id,height\nv1,360\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MissingHeader);
    }
    try {
        parse_csv(std::string(kCsvHeader) + "\nv1,360,47\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MalformedRow);
    }
    try {
        parse_csv(std::string(kCsvHeader) + "\nv1,360,47,abc,0.5,1,0.02,150,40,80\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MalformedRow);
    }
    try {
        parse_csv(std::string(kCsvHeader) + "\nv1,360,47,-1,0.5,1,0.02,150,40,80\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvariantViolation);
    }
}

TEST(Csv, EmptyDatasetIsHeaderOnly) {
    TempDir dir("csv0");
    save_dataset(Dataset{}, dir / "e.csv");
    EXPECT_EQ(greenladder::testing::slurp(dir / "e.csv"), std::string(kCsvHeader) + "\n");
}

TEST(Csv, SavingTwiceIsByteIdentical) {
    TempDir dir("csvtwice");
    const auto ds = greenladder::testing::synth(3);
    save_dataset(ds, dir / "a.csv");
    save_dataset(ds, dir / "b.csv");
    EXPECT_EQ(greenladder::testing::slurp(dir / "a.csv"), greenladder::testing::slurp(dir / "b.csv"));
}

TEST(Csv, RandomDatasetsRoundTrip) {
    TempDir dir("csvrt");
    Rng rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        const auto ds = random_dataset(rng);
        save_dataset(ds, dir / "r.csv");
        const auto back = load_dataset(dir / "r.csv");
        ASSERT_EQ(back.records(), ds.records()) << "trial " << trial;
    }
}

TEST(Csv, MissingFileIsIoFailure) {
    try {
        load_dataset("/nonexistent/dir/none.csv");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::IoFailure);
    }
}

TEST(Split, SeventyThirty) {
    const auto ds = greenladder::testing::synth(100, 0.05, 1, ConfigSpace({360, 720}, {22, 47}));
    const auto s = split_by_video(ds, 0.7, 42);
    EXPECT_EQ(s.train.video_ids().size(), 70u);
    EXPECT_EQ(s.test.video_ids().size(), 30u);
}

TEST(Split, Deterministic) {
    const auto ds = greenladder::testing::synth(20);
    const auto a = split_by_video(ds, 0.7, 5), b = split_by_video(ds, 0.7, 5);
    EXPECT_EQ(a.train.records(), b.train.records());
    EXPECT_EQ(a.test.records(), b.test.records());
}

TEST(Split, PartitionIsDisjointAndExhaustive) {
    const auto ds = greenladder::testing::synth(10);
    const auto s = split_by_video(ds, 0.7, 42);
    const auto tr = s.train.video_ids(), te = s.test.video_ids(), all = ds.video_ids();
    for (const auto& id : tr) EXPECT_EQ(std::count(te.begin(), te.end(), id), 0) << id;
    std::vector<std::string> both(tr);
    both.insert(both.end(), te.begin(), te.end());
    std::sort(both.begin(), both.end());
    EXPECT_EQ(both, all);
    EXPECT_EQ(s.train.size() + s.test.size(), ds.size());
    // Every video keeps all of its records on one side.
    for (const auto& id : tr) EXPECT_EQ(s.train.records_of(id).size(), 42u);
}

TEST(Split, Errors) {
    const auto one = greenladder::testing::synth(1);
    EXPECT_THROW(split_by_video(one, 0.7, 1), Error);
    const auto ds = greenladder::testing::synth(4);
    EXPECT_THROW(split_by_video(ds, 1.0, 1), Error);
    EXPECT_THROW(split_by_video(ds, 0.0, 1), Error);
}

TEST(AnchorOf, UsesLowestResolutionHighestQp) {
    const auto ds = greenladder::testing::synth(2);
    const auto a = anchor_of(ds, "v000", ConfigSpace::paper_ladder());
    EXPECT_EQ(a.enc_time, ds.find("v000", 360, 47)->enc_time);
    EXPECT_EQ(a.vmaf, ds.find("v000", 360, 47)->vmaf);
}

TEST(AnchorOf, MissingAnchorRecord) {
    const Dataset ds({record("a", 720, 22)});
    try {
        anchor_of(ds, "a", ConfigSpace({360, 720}, {22, 47}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MissingAnchorRecord);
    }
}
