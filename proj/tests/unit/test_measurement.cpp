#include <gtest/gtest.h>

#include <cmath>

#include "greenladder/external.hpp"
#include "greenladder/measurement.hpp"
#include "support.hpp"

using namespace greenladder;
using greenladder::testing::TempDir;

namespace {

SyntheticWorldParams noiseless(int videos = 5) {
    SyntheticWorldParams p;
    p.n_videos = videos;
    p.noise_sd = 0.0;
    return p;
}

struct CountingProvider {
    int calls = 0;
    std::vector<Representation> seen;
    MeasurementRecord measure(std::string_view id, const Representation& rep) {
        ++calls;
        seen.push_back(rep);
        MeasurementRecord r;
        r.video_id = std::string(id);
        r.rep = rep;
        r.enc_time = 9.48;
        r.dec_time = 0.9;
        r.psnr = 30;
        r.vmaf = 40;
        return r;
    }
};

ExternalCommand stub(const TempDir& dir, const std::string& encode_body, const std::string& decode_body = "true") {
    ExternalCommand cmd;
    cmd.encode_template = encode_body + " # {input} {width} {height} {qp} {output}";
    cmd.decode_template = decode_body;
    cmd.work_dir = dir.path();
    cmd.lock_file = dir / "lock";
    cmd.timeout = std::chrono::seconds(20);
    return cmd;
}

} // namespace

TEST(EnergyFromTime, UnitConversion) {
    EXPECT_DOUBLE_EQ(energy_from_time(0, PowerModel{50, 0}), 0.0);
    EXPECT_DOUBLE_EQ(energy_from_time(3600, PowerModel{50, 0}), 50.0);
    EXPECT_THROW(energy_from_time(-1, PowerModel{50, 0}), Error);
}

TEST(EnergyFromTime, FittedPowerModelReproducesSyntheticEnergy) {
    const auto ds = synth_generate(SyntheticWorldParams{}, ConfigSpace::paper_ladder());
    std::vector<double> t, e;
    for (const auto& r : ds.records()) {
        t.push_back(r.enc_time);
        e.push_back(r.enc_energy);
    }
    const auto pm = fit_power_model(t, e);
    EXPECT_NEAR(pm.avg_power, 200.0, 1e-9);
    EXPECT_NEAR(pm.intercept, 0.0, 1e-9);
    for (const auto& r : ds.records()) EXPECT_NEAR(energy_from_time(r.enc_time, pm), r.enc_energy, 1e-9);
}

TEST(Synthetic, NoiselessAnchorTimeIsBaseTimesComplexity) {
    const auto p = noiseless();
    const SyntheticProvider prov(p, ConfigSpace::paper_ladder());
    const auto ds = synth_generate(p, ConfigSpace::paper_ladder());
    for (const auto& id : ds.video_ids()) {
        const double c = prov.complexity(id);
        EXPECT_GE(c, 0.5);
        EXPECT_LE(c, 2.0);
        EXPECT_NEAR(ds.find(id, 360, 47)->enc_time, p.base_enc_time * c, 1e-12);
        auto copy = prov;
        EXPECT_NEAR(run_anchor(copy, id, ConfigSpace::paper_ladder()).enc_time, p.base_enc_time * c, 1e-12);
    }
}

TEST(Synthetic, NoiselessTimeMonotoneInPixelsAndQp) {
    const auto space = ConfigSpace::paper_ladder();
    const auto ds = synth_generate(noiseless(), space);
    for (const auto& id : ds.video_ids()) {
        for (int qp : space.qps()) {
            for (std::size_t i = 1; i < space.resolutions().size(); ++i) {
                EXPECT_GT(ds.find(id, space.resolutions()[i].height, qp)->enc_time,
                          ds.find(id, space.resolutions()[i - 1].height, qp)->enc_time);
            }
        }
        for (const auto& res : space.resolutions()) {
            for (std::size_t j = 1; j < space.qps().size(); ++j) {
                EXPECT_LT(ds.find(id, res.height, space.qps()[j])->enc_time,
                          ds.find(id, res.height, space.qps()[j - 1])->enc_time);
                EXPECT_LT(ds.find(id, res.height, space.qps()[j])->dec_time,
                          ds.find(id, res.height, space.qps()[j - 1])->dec_time);
            }
        }
    }
}

TEST(Synthetic, Deterministic) {
    const SyntheticWorldParams p;
    EXPECT_EQ(synth_generate(p, ConfigSpace::paper_ladder()), synth_generate(p, ConfigSpace::paper_ladder()));
    auto q = p;
    q.seed = 43;
    EXPECT_NE(synth_generate(p, ConfigSpace::paper_ladder()), synth_generate(q, ConfigSpace::paper_ladder()));
}

TEST(Synthetic, RowCount) {
    EXPECT_EQ(synth_generate(noiseless(10), ConfigSpace::paper_ladder()).size(), 420u);
}

TEST(Synthetic, RejectsInvalidParams) {
    auto p = noiseless();
    p.noise_sd = 0.3;
    EXPECT_THROW(synth_generate(p, ConfigSpace::paper_ladder()), Error);
    p = noiseless();
    p.n_videos = 0;
    EXPECT_THROW(synth_generate(p, ConfigSpace::paper_ladder()), Error);
}

TEST(RunAnchor, TouchesOnlyTheAnchor) {
    CountingProvider prov;
    const auto a = run_anchor(prov, "x", ConfigSpace::paper_ladder());
    EXPECT_EQ(prov.calls, 1);
    ASSERT_EQ(prov.seen.size(), 1u);
    EXPECT_EQ(prov.seen[0], Representation::make(360, 47));
    EXPECT_DOUBLE_EQ(a.enc_time, 9.48);
}

TEST(RunAnchor, TypeErasedProvider) {
    CountingProvider inner;
    auto any = AnyProvider::wrap(inner);
    run_anchor(any, "x", ConfigSpace({720, 1080}, {30, 40}));
    EXPECT_EQ(inner.calls, 1);
    EXPECT_EQ(inner.seen[0], Representation::make(720, 40));
}

TEST(DatasetProviderTest, MissingCell) {
    const auto ds = greenladder::testing::synth(1, 0.0, 1, ConfigSpace({360}, {47}));
    DatasetProvider prov(ds);
    EXPECT_NO_THROW(prov.measure("v000", Representation::make(360, 47)));
    EXPECT_THROW(prov.measure("v000", Representation::make(720, 47)), Error);
}

TEST(External, SleepingStubTimesAboutOneSecond) {
    TempDir dir("ext_sleep");
    const auto cmd = stub(dir, "sleep 1; printf '{\"bitrate_kbps\":100,\"psnr_db\":40,\"vmaf\":90}' > {sidecar}");
    const auto r = external_measure(cmd, dir / "clip.y4m", Representation::make(360, 47));
    EXPECT_GE(r.enc_time, 1.0);
    EXPECT_LE(r.enc_time, 1.5);
    EXPECT_EQ(r.video_id, "clip");
    EXPECT_DOUBLE_EQ(r.vmaf, 90);
    EXPECT_NEAR(r.enc_energy, energy_from_time(r.enc_time, cmd.enc_power), 1e-12);
}

TEST(External, PlaceholdersAreSubstituted) {
    TempDir dir("ext_subst");
    const auto cmd = stub(dir, "printf '{\"bitrate_kbps\":{width},\"psnr_db\":{qp},\"vmaf\":50,\"enc_time_s\":{height}}' > {sidecar}");
    const auto r = external_measure(cmd, dir / "clip.y4m", Representation::make(720, 33));
    EXPECT_DOUBLE_EQ(r.bitrate, 1280);
    EXPECT_DOUBLE_EQ(r.psnr, 33);
    EXPECT_DOUBLE_EQ(r.enc_time, 720);
}

TEST(External, NonZeroExitIsCommandFailed) {
    TempDir dir("ext_fail");
    const auto cmd = stub(dir, "exit 3");
    try {
        external_measure(cmd, dir / "clip.y4m", Representation::make(360, 47));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::CommandFailed);
    }
}

TEST(External, SidecarMissingVmafNamesTheField) {
    TempDir dir("ext_parse");
    const auto cmd = stub(dir, "printf '{\"bitrate_kbps\":100,\"psnr_db\":40}' > {sidecar}");
    try {
        external_measure(cmd, dir / "clip.y4m", Representation::make(360, 47));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ParseFailure);
        EXPECT_NE(e.detail().find("vmaf"), std::string::npos);
    }
}

TEST(External, TimeoutKillsTheCommand) {
    TempDir dir("ext_timeout");
    auto cmd = stub(dir, "sleep 5");
    cmd.timeout = std::chrono::milliseconds(200);
    try {
        external_measure(cmd, dir / "clip.y4m", Representation::make(360, 47));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Timeout);
    }
}

TEST(External, TemplateWithoutPlaceholderIsRejected) {
    TempDir dir("ext_tpl");
    ExternalCommand cmd;
    cmd.encode_template = "true {input}";
    cmd.work_dir = dir.path();
    EXPECT_THROW(external_measure(cmd, dir / "clip.y4m", Representation::make(360, 47)), Error);
}
