#pragma once

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "greenladder/anchor_analysis.hpp"
#include "greenladder/core_model.hpp"
#include "greenladder/error.hpp"
#include "greenladder/external.hpp"
#include "greenladder/measurement.hpp"
#include "greenladder/predictor.hpp"
#include "greenladder/report.hpp"
#include "greenladder/selector.hpp"
#include "greenladder/training.hpp"

namespace greenladder::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kIo = 3, kTraining = 4, kModel = 5 };

inline constexpr std::uint64_t kDefaultSeed = 42;
inline constexpr double kDefaultTrainFraction = 0.7;
inline const std::vector<double> kDefaultRhoList{0.0, 0.05, 0.1, 0.3, 0.5, 0.7, 1.0};

/// Settings shared by every command. Loaded from a JSON file; any flag given
/// on the command line takes precedence over the file.
struct RunConfig {
    std::optional<std::vector<int>> heights;
    std::optional<std::vector<int>> qps;
    std::optional<std::uint64_t> seed;
    std::optional<double> train_fraction;
    std::optional<std::string> quality_metric;
    std::optional<std::vector<double>> rho_list;
    std::optional<std::string> grid;
    std::optional<int> folds;
    std::optional<unsigned> threads;
    std::map<std::string, std::string> paths; // data, models, out_dir
};

inline RunConfig parse_run_config(const nlohmann::json& j) {
    if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "config must be a JSON object");
    static const std::set<std::string> known{"heights", "qps",  "seed",  "train_fraction", "quality_metric",
                                             "rho_list", "grid", "folds", "threads",        "paths"};
    static const std::set<std::string> known_paths{"data", "models", "out_dir"};
    RunConfig c;
    try {
        for (const auto& [key, value] : j.items()) {
            if (!known.contains(key)) throw Error(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
        }
        if (j.contains("heights")) c.heights = j["heights"].get<std::vector<int>>();
        if (j.contains("qps")) c.qps = j["qps"].get<std::vector<int>>();
        if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("train_fraction")) c.train_fraction = j["train_fraction"].get<double>();
        if (j.contains("quality_metric")) c.quality_metric = j["quality_metric"].get<std::string>();
        if (j.contains("rho_list")) c.rho_list = j["rho_list"].get<std::vector<double>>();
        if (j.contains("grid")) c.grid = j["grid"].get<std::string>();
        if (j.contains("folds")) c.folds = j["folds"].get<int>();
        if (j.contains("threads")) c.threads = j["threads"].get<unsigned>();
        if (j.contains("paths")) {
            for (const auto& [key, value] : j["paths"].items()) {
                if (!known_paths.contains(key)) throw Error(ErrorCode::InvalidArgument, "unknown paths key '" + key + "'");
                c.paths[key] = value.get<std::string>();
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("config: ") + e.what());
    }
    return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, path.string() + ": " + e.what());
    }
    return parse_run_config(j);
}

namespace detail {

/// Failure already mapped to an exit code.
struct Failure : std::runtime_error {
    Failure(int c, const std::string& what) : std::runtime_error(what), code(c) {}
    int code;
};

/// Runs one pipeline stage; library errors become `code`, I/O errors exit 3
/// unless `io_too` folds them into `code` as well.
template <typename F>
auto stage(int code, F&& f, bool io_too = false) -> decltype(f()) {
    try {
        return f();
    } catch (const Error& e) {
        throw Failure(e.code() == ErrorCode::IoFailure && !io_too ? kIo : code, e.what());
    }
}

inline void usage(const std::string& what) { throw Failure(kUsage, what); }

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Failure(kIo, "cannot write " + path.string());
    out << text;
    if (!out.flush()) throw Failure(kIo, "write failed: " + path.string());
}

inline std::uint64_t parse_seed(const std::string& s, const char* origin) {
    std::uint64_t v = 0;
    const auto* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || p != end || s.empty()) usage(std::string("invalid seed '") + s + "' from " + origin);
    return v;
}

struct Common {
    std::string config_path;
    std::vector<int> heights, qps;
    std::optional<std::uint64_t> seed;
    RunConfig config;

    void load() {
        if (!config_path.empty()) config = stage(kUsage, [&] { return load_run_config(config_path); });
    }

    /// Flag, then config file, then GREENLADDER_SEED, then the default.
    std::uint64_t resolved_seed() const {
        if (seed) return *seed;
        if (config.seed) return *config.seed;
        if (const char* env = std::getenv("GREENLADDER_SEED"); env != nullptr && *env != '\0') {
            return parse_seed(env, "GREENLADDER_SEED");
        }
        return kDefaultSeed;
    }

    /// Flags, then config file, then `fallback`.
    ConfigSpace resolved_space(const ConfigSpace& fallback) const {
        return stage(kUsage, [&] {
            auto h = !heights.empty() ? heights : config.heights.value_or(fallback.heights());
            auto q = !qps.empty() ? qps : config.qps.value_or(fallback.qps());
            return ConfigSpace(std::move(h), std::move(q));
        });
    }

    bool has_space_override() const { return !heights.empty() || !qps.empty() || config.heights || config.qps; }

    std::string path(const std::string& flag_value, const std::string& key, const std::string& flag_name) const {
        if (!flag_value.empty()) return flag_value;
        auto it = config.paths.find(key);
        if (it != config.paths.end() && !it->second.empty()) return it->second;
        usage("missing " + flag_name);
        return {};
    }

    double train_fraction(std::optional<double> flag) const {
        return flag.value_or(config.train_fraction.value_or(kDefaultTrainFraction));
    }

    QualityMetric metric(const std::string& flag) const {
        const std::string m = !flag.empty() ? flag : config.quality_metric.value_or("vmaf");
        return stage(kUsage, [&] { return quality_metric_from_string(m); });
    }

    std::vector<Rho> rho_list(const std::vector<double>& flag) const {
        const auto& v = !flag.empty() ? flag : config.rho_list ? *config.rho_list : kDefaultRhoList;
        return stage(kUsage, [&] {
            std::vector<Rho> out;
            for (double r : v) out.emplace_back(r);
            return out;
        });
    }

    GridPreset grid(const std::string& flag) const {
        const std::string g = !flag.empty() ? flag : config.grid.value_or("paper");
        return stage(kUsage, [&] { return grid_preset_from_string(g); });
    }

    int folds(std::optional<int> flag) const {
        const int k = flag.value_or(config.folds.value_or(5));
        if (k < 2) usage("folds must be at least 2");
        return k;
    }

    unsigned threads(std::optional<unsigned> flag) const { return flag.value_or(config.threads.value_or(0)); }

    void add_to(CLI::App& app) {
        app.add_option("--config", config_path, "JSON run configuration");
        app.add_option("--heights", heights, "Ladder resolutions (heights)")->delimiter(',');
        app.add_option("--qps", qps, "Ladder QPs")->delimiter(',');
        app.add_option("--seed", seed, "Seed (falls back to GREENLADDER_SEED)");
    }
};

inline Dataset load_data(const std::string& path) {
    return stage(kUsage, [&] { return load_dataset(path); });
}

inline Dataset subset(const Dataset& ds, const std::set<std::string>& ids) {
    std::vector<MeasurementRecord> recs;
    for (const auto& r : ds.records()) {
        if (ids.contains(r.video_id)) recs.push_back(r);
    }
    return Dataset(std::move(recs));
}

inline std::string space_summary(const Dataset& ds) {
    std::string out = "height,rows,mean_enc_energy_wh,mean_dec_energy_wh,mean_vmaf\n";
    std::map<int, std::vector<const MeasurementRecord*>> by_h;
    for (const auto& r : ds.records()) by_h[r.rep.height()].push_back(&r);
    for (const auto& [h, recs] : by_h) {
        double e = 0, d = 0, v = 0;
        for (const auto* r : recs) {
            e += r->enc_energy;
            d += r->dec_energy;
            v += r->vmaf;
        }
        const double n = static_cast<double>(recs.size());
        out += std::to_string(h) + "," + std::to_string(recs.size()) + "," + greenladder::detail::format_double(e / n) + ","
             + greenladder::detail::format_double(d / n) + "," + greenladder::detail::format_double(v / n) + "\n";
    }
    return out;
}

inline std::filesystem::path model_path(const std::filesystem::path& dir, Target t) {
    return dir / (std::string(to_string(t)) + ".json");
}

inline std::filesystem::path model_path(const std::filesystem::path& dir, Target t, Family f) {
    return dir / (std::string(to_string(t)) + "." + std::string(to_string(f)) + ".json");
}

/// Loads the selected model for each target the selector needs.
inline PredictorSet load_models(const std::filesystem::path& dir, QualityMetric metric) {
    PredictorSet set;
    for (Target t : {Target::enc_energy, Target::dec_energy, quality_target(metric)}) {
        const auto path = model_path(dir, t);
        if (!std::filesystem::exists(path)) throw Failure(kModel, "MissingModel: " + path.string());
        auto p = stage(kModel, [&] { return load_predictor(path); }, true);
        if (p.target != t) throw Failure(kModel, "InvalidArgument: " + path.string() + " holds a " + std::string(to_string(p.target)) + " model");
        set.emplace(t, std::move(p));
    }
    return set;
}

inline std::optional<nlohmann::json> load_run_json(const std::filesystem::path& models_dir) {
    const auto path = models_dir / "run.json";
    if (!std::filesystem::exists(path)) return std::nullopt;
    std::ifstream in(path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Failure(kModel, path.string() + ": " + e.what());
    }
}

inline ConfigSpace space_from_run_json(const std::optional<nlohmann::json>& run) {
    if (!run) return ConfigSpace::paper_ladder();
    try {
        return ConfigSpace(run->at("heights").get<std::vector<int>>(), run->at("qps").get<std::vector<int>>());
    } catch (const nlohmann::json::exception& e) {
        throw Failure(kModel, std::string("run.json: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// dataset synth | measure
// ---------------------------------------------------------------------------

struct SynthArgs {
    Common common;
    std::string out;
    std::optional<int> videos;
    std::optional<double> noise, base_enc_time, pixel_exponent, qp_decay, power_enc, power_dec, quality_ceiling;
};

inline int cmd_synth(SynthArgs& a, std::ostream& out) {
    a.common.load();
    const auto out_path = a.common.path(a.out, "data", "--out");
    const auto space = a.common.resolved_space(ConfigSpace::paper_ladder());
    SyntheticWorldParams p;
    p.seed = a.common.resolved_seed();
    if (a.videos) p.n_videos = *a.videos;
    if (a.noise) p.noise_sd = *a.noise;
    if (a.base_enc_time) p.base_enc_time = *a.base_enc_time;
    if (a.pixel_exponent) p.pixel_exponent = *a.pixel_exponent;
    if (a.qp_decay) p.qp_decay = *a.qp_decay;
    if (a.power_enc) p.power_enc = *a.power_enc;
    if (a.power_dec) p.power_dec = *a.power_dec;
    if (a.quality_ceiling) p.quality_ceiling = *a.quality_ceiling;
    const auto ds = stage(kUsage, [&] { return synth_generate(p, space); });
    write_text(out_path, to_csv(ds));
    out << "wrote " << ds.size() << " rows to " << out_path << "\n" << space_summary(ds);
    return kOk;
}

struct MeasureArgs {
    Common common;
    std::string out, encode_cmd, decode_cmd, video_list, work_dir, lock_file;
    std::optional<double> timeout_s, enc_power, dec_power;
};

inline int cmd_measure(MeasureArgs& a, std::ostream& out) {
    a.common.load();
    const auto out_path = a.common.path(a.out, "data", "--out");
    const auto space = a.common.resolved_space(ConfigSpace::paper_ladder());
    ExternalCommand cmd;
    cmd.encode_template = a.encode_cmd;
    cmd.decode_template = a.decode_cmd;
    if (!a.work_dir.empty()) cmd.work_dir = a.work_dir;
    if (!a.lock_file.empty()) cmd.lock_file = a.lock_file;
    if (a.timeout_s) {
        if (!(*a.timeout_s > 0)) usage("--timeout-s must be positive");
        cmd.timeout = std::chrono::milliseconds(static_cast<std::int64_t>(*a.timeout_s * 1000.0));
    }
    if (a.enc_power) cmd.enc_power.avg_power = *a.enc_power;
    if (a.dec_power) cmd.dec_power.avg_power = *a.dec_power;

    std::ifstream list(a.video_list);
    if (!list) throw Failure(kIo, "cannot open " + a.video_list);
    std::vector<std::filesystem::path> videos;
    for (std::string line; std::getline(list, line);) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (!line.empty() && line.front() != '#') videos.emplace_back(line);
    }
    if (videos.empty()) usage(a.video_list + " lists no videos");

    std::vector<MeasurementRecord> records;
    for (const auto& v : videos) {
        for (const auto& rep : space.representations()) {
            records.push_back(stage(kIo, [&] { return external_measure(cmd, v, rep); }));
            out << v.stem().string() << " " << to_string(rep) << " enc " << records.back().enc_time << " s\n";
        }
    }
    const auto ds = stage(kUsage, [&] { return Dataset(std::move(records)); });
    write_text(out_path, to_csv(ds));
    out << "wrote " << ds.size() << " rows to " << out_path << "\n" << space_summary(ds);
    return kOk;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
    Common common;
    std::string data, out_dir, grid;
    std::vector<std::string> families, targets;
    std::optional<double> train_fraction;
    std::optional<int> folds;
    std::optional<unsigned> threads;
};

inline int cmd_train(TrainArgs& a, std::ostream& out) {
    a.common.load();
    const std::filesystem::path dir = a.common.path(a.out_dir, "models", "--out-dir");
    const auto ds = load_data(a.common.path(a.data, "data", "--data"));
    const auto space = a.common.has_space_override() ? a.common.resolved_space(ConfigSpace::paper_ladder())
                                                     : stage(kUsage, [&] { return ds.inferred_space(); });
    const auto seed = a.common.resolved_seed();
    const double fraction = a.common.train_fraction(a.train_fraction);

    TrainOptions opt;
    opt.preset = a.common.grid(a.grid);
    opt.folds = a.common.folds(a.folds);
    opt.threads = a.common.threads(a.threads);
    stage(kUsage, [&] {
        if (!a.families.empty()) {
            opt.families.clear();
            for (const auto& f : a.families) opt.families.push_back(family_from_string(f));
        }
        if (!a.targets.empty()) {
            opt.targets.clear();
            for (const auto& t : a.targets) opt.targets.push_back(target_from_string(t));
        }
        return 0;
    });

    const auto split = stage(kTraining, [&] { return split_by_video(ds, fraction, seed); });
    const auto trained = stage(kTraining, [&] { return train_all(split.train, space, seed, opt); });
    const auto rows = stage(kTraining, [&] { return accuracy_rows(trained, split.test, space); });

    nlohmann::json cv = nlohmann::json::object();
    for (const auto& [target, tt] : trained) {
        for (const auto& fo : tt.families) {
            cv[std::string(to_string(target))][std::string(to_string(fo.family))] = cv_to_json(fo.cv);
            write_text(model_path(dir, target, fo.family), to_json(fo.model).dump(1) + "\n");
        }
        write_text(model_path(dir, target), to_json(tt.best_outcome().model).dump(1) + "\n");
    }
    const nlohmann::json run{{"heights", space.heights()},
                             {"qps", space.qps()},
                             {"seed", seed},
                             {"train_fraction", fraction},
                             {"folds", opt.folds},
                             {"grid", opt.preset == GridPreset::paper ? "paper" : "compact"},
                             {"train_videos", split.train.video_ids()},
                             {"test_videos", split.test.video_ids()}};
    write_text(dir / "run.json", run.dump(1) + "\n");
    write_text(dir / "cv.json", cv.dump(1) + "\n");
    const auto table = accuracy_table(rows);
    write_text(dir / "table3.csv", accuracy_csv(rows));
    write_text(dir / "table3.txt", table);
    out << table;
    return kOk;
}

// ---------------------------------------------------------------------------
// select
// ---------------------------------------------------------------------------

struct SelectArgs {
    Common common;
    std::string models, metric, data, video, encode_cmd, decode_cmd, input, work_dir;
    std::optional<double> rho, enc_time, dec_time, vmaf, psnr;
    double enc_weight = 1.0, dec_weight = 1.0;
};

inline int cmd_select(SelectArgs& a, std::ostream& out) {
    a.common.load();
    const std::filesystem::path dir = a.common.path(a.models, "models", "--models");
    const auto metric = a.common.metric(a.metric);
    if (!a.rho) usage("missing --rho");
    const Rho rho = stage(kUsage, [&] { return Rho(*a.rho); });

    const bool from_flags = a.enc_time || a.dec_time;
    const bool from_data = !a.data.empty() || !a.video.empty();
    const bool from_cmd = !a.encode_cmd.empty() || !a.input.empty();
    if (int(from_flags) + int(from_data) + int(from_cmd) != 1) {
        usage("give exactly one anchor source: --anchor-* flags, --data with --video, or --encode-cmd with --input");
    }

    const auto models = load_models(dir, metric);
    const auto space = a.common.has_space_override() ? a.common.resolved_space(ConfigSpace::paper_ladder())
                                                     : space_from_run_json(load_run_json(dir));

    AnchorMeasurement anchor;
    if (from_flags) {
        if (!a.enc_time || !a.dec_time) usage("--anchor-enc-time and --anchor-dec-time go together");
        const auto& q = metric == QualityMetric::vmaf ? a.vmaf : a.psnr;
        if (!q) usage(std::string("missing --anchor-") + std::string(to_string(metric)));
        anchor = AnchorMeasurement{"anchor", *a.enc_time, *a.dec_time, a.psnr.value_or(0.0), a.vmaf.value_or(0.0)};
    } else if (from_data) {
        if (a.data.empty() || a.video.empty()) usage("--data and --video go together");
        const auto ds = load_data(a.data);
        anchor = stage(kUsage, [&] { return anchor_of(ds, a.video, space); });
    } else {
        if (a.encode_cmd.empty() || a.decode_cmd.empty() || a.input.empty()) {
            usage("--encode-cmd, --decode-cmd and --input go together");
        }
        ExternalCommand cmd;
        cmd.encode_template = a.encode_cmd;
        cmd.decode_template = a.decode_cmd;
        if (!a.work_dir.empty()) cmd.work_dir = a.work_dir;
        ExternalProvider provider(cmd, std::filesystem::path(a.input).parent_path(),
                                  std::filesystem::path(a.input).extension().string());
        anchor = stage(kIo, [&] { return run_anchor(provider, std::filesystem::path(a.input).stem().string(), space); });
    }

    const auto result = stage(kUsage, [&] {
        return select(build_grid(models, anchor, space, metric, StageWeights{a.enc_weight, a.dec_weight}), rho);
    });
    out << to_json(result, anchor.video_id, rho.value()).dump(2) << "\n";
    return kOk;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateArgs {
    Common common;
    std::string data, models, out_dir, metric;
    std::vector<double> rho;
    bool all_videos = false;
    double enc_weight = 1.0, dec_weight = 1.0;
};

inline int cmd_evaluate(EvaluateArgs& a, std::ostream& out) {
    a.common.load();
    const std::filesystem::path dir = a.common.path(a.models, "models", "--models");
    const std::filesystem::path out_dir = a.common.path(a.out_dir, "out_dir", "--out-dir");
    const auto metric = a.common.metric(a.metric);
    const auto rhos = a.common.rho_list(a.rho);
    const auto ds_all = load_data(a.common.path(a.data, "data", "--data"));
    const auto models = load_models(dir, metric);
    const auto run = load_run_json(dir);
    const auto space = a.common.has_space_override() ? a.common.resolved_space(ConfigSpace::paper_ladder())
                                                     : space_from_run_json(run);

    // Score only the held-out videos of the training run unless told otherwise.
    Dataset ds = ds_all;
    if (!a.all_videos && run && run->contains("test_videos")) {
        const auto ids = run->at("test_videos").get<std::set<std::string>>();
        ds = subset(ds_all, ids);
        if (ds.size() == 0) usage("none of the held-out videos of " + dir.string() + " are in the dataset");
    }

    const auto eval = stage(kUsage, [&] {
        return evaluate_policy_detailed(ds, models, space, rhos, metric, StageWeights{a.enc_weight, a.dec_weight});
    });
    nlohmann::json choices = nlohmann::json::array();
    for (const auto& c : eval.choices) {
        auto j = to_json(c.selection, c.video_id, c.rho);
        j.erase("feasible");
        j["measured"] = {{"enc_energy_wh", c.truth->enc_energy}, {"dec_energy_wh", c.truth->dec_energy},
                         {"psnr_db", c.truth->psnr},             {"vmaf", c.truth->vmaf}};
        choices.push_back(std::move(j));
    }
    nlohmann::json reports = nlohmann::json::array();
    for (const auto& r : eval.reports) reports.push_back(nlohmann::json(r));
    write_text(out_dir / "table4.csv", policy_csv(eval.reports));
    write_text(out_dir / "table4.txt", policy_table(eval.reports));
    write_text(out_dir / "policy.json", nlohmann::json{{"reports", reports}, {"choices", choices}}.dump(1) + "\n");
    out << policy_table(eval.reports);
    return kOk;
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

struct AnalyzeArgs {
    Common common;
    std::string data, out_dir, family, target, grid;
    std::optional<double> train_fraction;
    std::optional<int> folds;
    std::optional<unsigned> threads;
    bool no_sweep = false;
};

inline int cmd_analyze(AnalyzeArgs& a, std::ostream& out) {
    a.common.load();
    const std::filesystem::path out_dir = a.common.path(a.out_dir, "out_dir", "--out-dir");
    const auto ds = load_data(a.common.path(a.data, "data", "--data"));
    const auto space = a.common.has_space_override() ? a.common.resolved_space(ConfigSpace::paper_ladder())
                                                     : stage(kUsage, [&] { return ds.inferred_space(); });

    const auto cm = stage(kUsage, [&] { return pairwise_correlation(ds, space); });
    const auto ranking = stage(kUsage, [&] { return anchor_ranking(cm, ds); });
    write_text(out_dir / "correlation_matrix.csv", correlation_csv(cm));
    write_text(out_dir / "anchor_ranking.csv", ranking_csv(ranking));
    out << "correlation matrix " << cm.dimension() << "x" << cm.dimension() << "\n";
    if (!ranking.empty()) {
        out << "fastest config " << to_string(ranking.front().config) << " (" << ranking.front().mean_time << " s)\n";
    }
    if (a.no_sweep) return kOk;

    SweepOptions opt;
    stage(kUsage, [&] {
        if (!a.family.empty()) opt.family = family_from_string(a.family);
        if (!a.target.empty()) opt.target = target_from_string(a.target);
        return 0;
    });
    opt.grid = preset_grid(opt.family, a.common.grid(a.grid.empty() && !a.common.config.grid ? "compact" : a.grid));
    opt.train_fraction = a.common.train_fraction(a.train_fraction);
    opt.folds = a.common.folds(a.folds);
    opt.threads = a.common.threads(a.threads);
    const auto candidates = default_sweep_candidates(space);
    const auto sweep = stage(kTraining, [&] { return anchor_sweep(ds, candidates, a.common.resolved_seed(), opt); });
    write_text(out_dir / "anchor_sweep.csv", sweep_csv(sweep));
    out << sweep_csv(sweep);
    return kOk;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

struct ReportArgs {
    Common common;
    std::string data, out_dir;
};

inline int cmd_report(ReportArgs& a, std::ostream& out) {
    a.common.load();
    const std::filesystem::path out_dir = a.common.path(a.out_dir, "out_dir", "--out-dir");
    const auto ds = load_data(a.common.path(a.data, "data", "--data"));
    if (ds.size() == 0) usage("dataset is empty");
    const auto by_res = aggregate(ds, GroupBy::resolution);
    const auto by_qp = aggregate(ds, GroupBy::qp);
    write_text(out_dir / "per_resolution.csv", aggregate_csv(by_res, GroupBy::resolution));
    write_text(out_dir / "per_qp.csv", aggregate_csv(by_qp, GroupBy::qp));
    out << space_summary(ds);
    return kOk;
}

} // namespace detail

/// Entry point shared by the executable and the tests.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    using namespace detail;
    CLI::App app{"Energy-aware bitrate ladder selection from a single anchor encode", "greenladder"};
    app.require_subcommand(1);

    auto* dataset = app.add_subcommand("dataset", "Generate or measure a dataset");
    dataset->require_subcommand(1);
    SynthArgs synth;
    auto* synth_cmd = dataset->add_subcommand("synth", "Synthetic dataset from the closed-form world");
    synth.common.add_to(*synth_cmd);
    synth_cmd->add_option("--out", synth.out, "Output CSV");
    synth_cmd->add_option("--videos", synth.videos, "Number of videos");
    synth_cmd->add_option("--noise", synth.noise, "Relative time noise SD");
    synth_cmd->add_option("--base-enc-time", synth.base_enc_time, "Anchor encode seconds at unit complexity");
    synth_cmd->add_option("--pixel-exponent", synth.pixel_exponent);
    synth_cmd->add_option("--qp-decay", synth.qp_decay);
    synth_cmd->add_option("--power-enc", synth.power_enc, "Encoder power, W");
    synth_cmd->add_option("--power-dec", synth.power_dec, "Decoder power, W");
    synth_cmd->add_option("--quality-ceiling", synth.quality_ceiling);

    MeasureArgs measure;
    auto* measure_cmd = dataset->add_subcommand("measure", "Measure a video list with external commands");
    measure.common.add_to(*measure_cmd);
    measure_cmd->add_option("--out", measure.out, "Output CSV");
    measure_cmd->add_option("--encode-cmd", measure.encode_cmd, "Encode template")->required();
    measure_cmd->add_option("--decode-cmd", measure.decode_cmd, "Decode template")->required();
    measure_cmd->add_option("--videos", measure.video_list, "File listing one video path per line")->required();
    measure_cmd->add_option("--work-dir", measure.work_dir);
    measure_cmd->add_option("--lock-file", measure.lock_file);
    measure_cmd->add_option("--timeout-s", measure.timeout_s);
    measure_cmd->add_option("--enc-power", measure.enc_power, "Encoder power, W");
    measure_cmd->add_option("--dec-power", measure.dec_power, "Decoder power, W");

    TrainArgs train;
    auto* train_cmd = app.add_subcommand("train", "Grid-search and fit every family for every target");
    train.common.add_to(*train_cmd);
    train_cmd->add_option("--data", train.data, "Dataset CSV");
    train_cmd->add_option("--out-dir", train.out_dir, "Model directory");
    train_cmd->add_option("--family", train.families, "Restrict families")->delimiter(',');
    train_cmd->add_option("--target", train.targets, "Restrict targets")->delimiter(',');
    train_cmd->add_option("--train-fraction", train.train_fraction);
    train_cmd->add_option("--folds", train.folds);
    train_cmd->add_option("--grid", train.grid, "paper or compact");
    train_cmd->add_option("--threads", train.threads, "0 = all cores");

    SelectArgs sel;
    auto* select_cmd = app.add_subcommand("select", "Pick the green representation for one video");
    sel.common.add_to(*select_cmd);
    select_cmd->add_option("--models", sel.models, "Model directory");
    select_cmd->add_option("--rho", sel.rho, "Allowed quality loss fraction");
    select_cmd->add_option("--metric", sel.metric, "vmaf or psnr");
    select_cmd->add_option("--anchor-enc-time", sel.enc_time, "Anchor encode seconds");
    select_cmd->add_option("--anchor-dec-time", sel.dec_time, "Anchor decode seconds");
    select_cmd->add_option("--anchor-vmaf", sel.vmaf);
    select_cmd->add_option("--anchor-psnr", sel.psnr);
    select_cmd->add_option("--data", sel.data, "Take the anchor from this dataset");
    select_cmd->add_option("--video", sel.video);
    select_cmd->add_option("--encode-cmd", sel.encode_cmd, "Measure the anchor with this encode template");
    select_cmd->add_option("--decode-cmd", sel.decode_cmd);
    select_cmd->add_option("--input", sel.input, "Source video for the anchor encode");
    select_cmd->add_option("--work-dir", sel.work_dir);
    select_cmd->add_option("--enc-weight", sel.enc_weight);
    select_cmd->add_option("--dec-weight", sel.dec_weight);

    EvaluateArgs ev;
    auto* eval_cmd = app.add_subcommand("evaluate", "Score the policy over a rho list");
    ev.common.add_to(*eval_cmd);
    eval_cmd->add_option("--data", ev.data, "Dataset CSV");
    eval_cmd->add_option("--models", ev.models, "Model directory");
    eval_cmd->add_option("--out-dir", ev.out_dir);
    eval_cmd->add_option("--rho", ev.rho, "Rho list")->delimiter(',');
    eval_cmd->add_option("--metric", ev.metric, "vmaf or psnr");
    eval_cmd->add_flag("--all-videos", ev.all_videos, "Score every video, not only the held-out ones");
    eval_cmd->add_option("--enc-weight", ev.enc_weight);
    eval_cmd->add_option("--dec-weight", ev.dec_weight);

    AnalyzeArgs an;
    auto* analyze_cmd = app.add_subcommand("analyze", "Encoding-time correlations and anchor sweep");
    an.common.add_to(*analyze_cmd);
    analyze_cmd->add_option("--data", an.data, "Dataset CSV");
    analyze_cmd->add_option("--out-dir", an.out_dir);
    analyze_cmd->add_option("--family", an.family);
    analyze_cmd->add_option("--target", an.target);
    analyze_cmd->add_option("--grid", an.grid, "paper or compact (default compact)");
    analyze_cmd->add_option("--train-fraction", an.train_fraction);
    analyze_cmd->add_option("--folds", an.folds);
    analyze_cmd->add_option("--threads", an.threads);
    analyze_cmd->add_flag("--no-sweep", an.no_sweep);

    ReportArgs rep;
    auto* report_cmd = app.add_subcommand("report", "Per-resolution and per-QP aggregates");
    rep.common.add_to(*report_cmd);
    report_cmd->add_option("--data", rep.data, "Dataset CSV");
    report_cmd->add_option("--out-dir", rep.out_dir);

    std::vector<const char*> argv{"greenladder"};
    for (const auto& s : args) argv.push_back(s.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (synth_cmd->parsed()) return cmd_synth(synth, out);
        if (measure_cmd->parsed()) return cmd_measure(measure, out);
        if (train_cmd->parsed()) return cmd_train(train, out);
        if (select_cmd->parsed()) return cmd_select(sel, out);
        if (eval_cmd->parsed()) return cmd_evaluate(ev, out);
        if (analyze_cmd->parsed()) return cmd_analyze(an, out);
        if (report_cmd->parsed()) return cmd_report(rep, out);
    } catch (const Failure& f) {
        err << "error: " << f.what() << "\n";
        return f.code;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.code() == ErrorCode::IoFailure ? kIo : kUsage;
    }
    return kUsage;
}

} // namespace greenladder::cli
