#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "greenladder/error.hpp"
#include "greenladder/random.hpp"

namespace greenladder {

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

struct Resolution {
    int height = 0;
    int width = 0;

    /// 16:9 width for a given line count, rounded to the nearest even number.
    static Resolution from_height(int height) {
        if (height < 1) throw Error(ErrorCode::InvariantViolation, "height");
        const double half = static_cast<double>(height) * 16.0 / 9.0 / 2.0;
        return Resolution{height, 2 * static_cast<int>(std::lround(half))};
    }

    std::int64_t pixels() const { return static_cast<std::int64_t>(height) * width; }

    friend bool operator==(const Resolution&, const Resolution&) = default;
    friend auto operator<=>(const Resolution& a, const Resolution& b) {
        return std::tie(a.height, a.width) <=> std::tie(b.height, b.width);
    }
};

inline constexpr int kMinQp = 0;
inline constexpr int kMaxQp = 63;

struct Representation {
    Resolution resolution;
    int qp = 0;

    static Representation make(int height, int qp) {
        if (qp < kMinQp || qp > kMaxQp) throw Error(ErrorCode::InvariantViolation, "qp");
        return Representation{Resolution::from_height(height), qp};
    }

    int height() const { return resolution.height; }

    friend bool operator==(const Representation&, const Representation&) = default;
    friend auto operator<=>(const Representation& a, const Representation& b) {
        return std::tie(a.resolution, a.qp) <=> std::tie(b.resolution, b.qp);
    }
};

inline std::string to_string(const Representation& rep) {
    return std::to_string(rep.height()) + "p/" + std::to_string(rep.qp);
}

/// The target ladder: resolutions x QPs, both strictly ascending.
class ConfigSpace {
public:
    ConfigSpace(std::vector<int> heights, std::vector<int> qps) : qps_(std::move(qps)) {
        if (heights.empty() || qps_.empty()) {
            throw Error(ErrorCode::InvalidArgument, "config space needs at least one resolution and one qp");
        }
        for (std::size_t i = 0; i < heights.size(); ++i) {
            if (i > 0 && heights[i] <= heights[i - 1]) {
                throw Error(ErrorCode::InvalidArgument, "resolutions must be strictly ascending");
            }
            resolutions_.push_back(Resolution::from_height(heights[i]));
        }
        for (std::size_t i = 0; i < qps_.size(); ++i) {
            if (qps_[i] < kMinQp || qps_[i] > kMaxQp) throw Error(ErrorCode::InvariantViolation, "qp");
            if (i > 0 && qps_[i] <= qps_[i - 1]) {
                throw Error(ErrorCode::InvalidArgument, "qps must be strictly ascending");
            }
        }
    }

    /// 360p..2160p x QP 17..47, the ladder used throughout the evaluation.
    static ConfigSpace paper_ladder() {
        return ConfigSpace({360, 540, 720, 1080, 1440, 2160}, {17, 22, 27, 32, 37, 42, 47});
    }

    const std::vector<Resolution>& resolutions() const { return resolutions_; }
    const std::vector<int>& qps() const { return qps_; }
    std::vector<int> heights() const {
        std::vector<int> h;
        for (const auto& r : resolutions_) h.push_back(r.height);
        return h;
    }

    const Resolution& min_resolution() const { return resolutions_.front(); }
    const Resolution& max_resolution() const { return resolutions_.back(); }
    int min_qp() const { return qps_.front(); }
    int max_qp() const { return qps_.back(); }

    /// Lowest resolution, highest QP: the cheapest encode in the ladder.
    Representation anchor() const { return Representation{min_resolution(), max_qp()}; }

    std::size_t size() const { return resolutions_.size() * qps_.size(); }

    /// All representations, resolution-major, ascending.
    std::vector<Representation> representations() const {
        std::vector<Representation> reps;
        reps.reserve(size());
        for (const auto& r : resolutions_) {
            for (int qp : qps_) reps.push_back(Representation{r, qp});
        }
        return reps;
    }

    bool contains(const Representation& rep) const {
        return std::find(resolutions_.begin(), resolutions_.end(), rep.resolution) != resolutions_.end()
            && std::find(qps_.begin(), qps_.end(), rep.qp) != qps_.end();
    }

    friend bool operator==(const ConfigSpace&, const ConfigSpace&) = default;

private:
    std::vector<Resolution> resolutions_;
    std::vector<int> qps_;
};

enum class QualityMetric { vmaf, psnr };

inline std::string_view to_string(QualityMetric m) { return m == QualityMetric::vmaf ? "vmaf" : "psnr"; }

inline QualityMetric quality_metric_from_string(std::string_view s) {
    if (s == "vmaf") return QualityMetric::vmaf;
    if (s == "psnr") return QualityMetric::psnr;
    throw Error(ErrorCode::InvalidArgument, "unknown quality metric '" + std::string(s) + "'");
}

/// One (video, representation) observation. Times in seconds, energies in Wh.
struct MeasurementRecord {
    std::string video_id;
    Representation rep;
    double enc_time = 0;
    double enc_energy = 0;
    double dec_time = 0;
    double dec_energy = 0;
    double bitrate = 0; // kbps
    double psnr = 0;    // dB
    double vmaf = 0;

    double quality(QualityMetric m) const { return m == QualityMetric::vmaf ? vmaf : psnr; }

    /// Throws InvariantViolation naming the first offending field.
    void validate() const {
        auto require = [](bool ok, const char* field) {
            if (!ok) throw Error(ErrorCode::InvariantViolation, field);
        };
        require(!video_id.empty() && video_id.find_first_of(",\"\r\n") == std::string::npos, "video_id");
        require(rep.resolution.height >= 1, "height");
        require(rep.qp >= kMinQp && rep.qp <= kMaxQp, "qp");
        require(std::isfinite(enc_time) && enc_time >= 0, "enc_time_s");
        require(std::isfinite(enc_energy) && enc_energy >= 0, "enc_energy_wh");
        require(std::isfinite(dec_time) && dec_time >= 0, "dec_time_s");
        require(std::isfinite(dec_energy) && dec_energy >= 0, "dec_energy_wh");
        require(std::isfinite(bitrate) && bitrate >= 0, "bitrate_kbps");
        require(std::isfinite(psnr) && psnr > 0, "psnr_db");
        require(std::isfinite(vmaf) && vmaf >= 0 && vmaf <= 100, "vmaf");
    }

    friend bool operator==(const MeasurementRecord&, const MeasurementRecord&) = default;
};

/// Measured anchor triple (t_enc, t_dec, quality) for one video.
struct AnchorMeasurement {
    std::string video_id;
    double enc_time = 0;
    double dec_time = 0;
    double psnr = 0;
    double vmaf = 0;

    double quality(QualityMetric m) const { return m == QualityMetric::vmaf ? vmaf : psnr; }

    void validate() const {
        if (!(enc_time > 0)) throw Error(ErrorCode::InvariantViolation, "anchor enc_time");
        if (!(dec_time > 0)) throw Error(ErrorCode::InvariantViolation, "anchor dec_time");
    }

    friend bool operator==(const AnchorMeasurement&, const AnchorMeasurement&) = default;
};

inline AnchorMeasurement anchor_from_record(const MeasurementRecord& r) {
    AnchorMeasurement a{r.video_id, r.enc_time, r.dec_time, r.psnr, r.vmaf};
    a.validate();
    return a;
}

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

inline constexpr int kDatasetSchemaVersion = 1;
inline constexpr std::string_view kCsvHeader =
    "video_id,height,qp,enc_time_s,enc_energy_wh,dec_time_s,dec_energy_wh,bitrate_kbps,psnr_db,vmaf";

/// Immutable collection of validated records, kept sorted by (video_id, height, qp).
class Dataset {
public:
    Dataset() = default;

    explicit Dataset(std::vector<MeasurementRecord> records) : records_(std::move(records)) {
        std::sort(records_.begin(), records_.end(), [](const auto& a, const auto& b) {
            return std::tie(a.video_id, a.rep.resolution.height, a.rep.qp)
                 < std::tie(b.video_id, b.rep.resolution.height, b.rep.qp);
        });
        for (std::size_t i = 0; i < records_.size(); ++i) {
            records_[i].validate();
            if (i > 0 && records_[i].video_id == records_[i - 1].video_id
                && records_[i].rep.height() == records_[i - 1].rep.height()
                && records_[i].rep.qp == records_[i - 1].rep.qp) {
                throw Error(ErrorCode::DuplicateKey,
                            records_[i].video_id + " " + to_string(records_[i].rep));
            }
        }
    }

    const std::vector<MeasurementRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    int schema_version() const { return kDatasetSchemaVersion; }

    /// Distinct video ids in ascending order.
    std::vector<std::string> video_ids() const {
        std::vector<std::string> ids;
        for (const auto& r : records_) {
            if (ids.empty() || ids.back() != r.video_id) ids.push_back(r.video_id);
        }
        return ids;
    }

    const MeasurementRecord* find(std::string_view video_id, const Representation& rep) const {
        return find(video_id, rep.height(), rep.qp);
    }

    const MeasurementRecord* find(std::string_view video_id, int height, int qp) const {
        auto key = std::make_tuple(video_id, height, qp);
        auto it = std::lower_bound(records_.begin(), records_.end(), key, [](const auto& r, const auto& k) {
            return std::make_tuple(std::string_view(r.video_id), r.rep.height(), r.rep.qp) < k;
        });
        if (it == records_.end() || it->video_id != video_id || it->rep.height() != height || it->rep.qp != qp) {
            return nullptr;
        }
        return &*it;
    }

    /// Records of one video, contiguous because of the sort order.
    std::vector<MeasurementRecord> records_of(std::string_view video_id) const {
        std::vector<MeasurementRecord> out;
        for (const auto& r : records_) {
            if (r.video_id == video_id) out.push_back(r);
        }
        return out;
    }

    /// Ladder spanned by the distinct heights and QPs present.
    ConfigSpace inferred_space() const {
        if (records_.empty()) throw Error(ErrorCode::EmptyInput, "dataset has no records");
        std::set<int> heights, qps;
        for (const auto& r : records_) {
            heights.insert(r.rep.height());
            qps.insert(r.rep.qp);
        }
        return ConfigSpace({heights.begin(), heights.end()}, {qps.begin(), qps.end()});
    }

    friend bool operator==(const Dataset&, const Dataset&) = default;

private:
    std::vector<MeasurementRecord> records_;
};

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

} // namespace detail

/// Serializes to the canonical CSV text. Equal datasets give equal bytes.
inline std::string to_csv(const Dataset& ds) {
    std::string out(kCsvHeader);
    out += '\n';
    for (const auto& r : ds.records()) {
        out += r.video_id;
        out += ',' + std::to_string(r.rep.height());
        out += ',' + std::to_string(r.rep.qp);
        for (double v : {r.enc_time, r.enc_energy, r.dec_time, r.dec_energy, r.bitrate, r.psnr, r.vmaf}) {
            out += ',';
            out += detail::format_double(v);
        }
        out += '\n';
    }
    return out;
}

inline Dataset parse_csv(std::string_view text) {
    auto next_line = [&text](std::string_view& line) {
        if (text.empty()) return false;
        auto pos = text.find('\n');
        line = text.substr(0, pos);
        text = pos == std::string_view::npos ? std::string_view{} : text.substr(pos + 1);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        return true;
    };

    std::string_view line;
    if (!next_line(line) || line != kCsvHeader) {
        throw Error(ErrorCode::MissingHeader, "expected header '" + std::string(kCsvHeader) + "'");
    }

    std::vector<MeasurementRecord> records;
    std::set<std::tuple<std::string, int, int>> seen;
    std::size_t line_no = 1;
    while (next_line(line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        const std::string where = "line " + std::to_string(line_no);
        if (f.size() != 10) throw Error(ErrorCode::MalformedRow, where);

        MeasurementRecord r;
        r.video_id = std::string(f[0]);
        int height = 0, qp = 0;
        bool ok = detail::parse_number(f[1], height) && detail::parse_number(f[2], qp);
        double* targets[] = {&r.enc_time, &r.enc_energy, &r.dec_time, &r.dec_energy, &r.bitrate, &r.psnr, &r.vmaf};
        for (std::size_t i = 0; i < 7 && ok; ++i) ok = detail::parse_number(f[3 + i], *targets[i]);
        if (!ok) throw Error(ErrorCode::MalformedRow, where);
        if (height < 1) throw Error(ErrorCode::InvariantViolation, "height (" + where + ")");
        if (qp < kMinQp || qp > kMaxQp) throw Error(ErrorCode::InvariantViolation, "qp (" + where + ")");
        r.rep = Representation{Resolution::from_height(height), qp};
        try {
            r.validate();
        } catch (const Error& e) {
            throw Error(ErrorCode::InvariantViolation, e.detail() + " (" + where + ")");
        }
        if (!seen.emplace(r.video_id, height, qp).second) {
            throw Error(ErrorCode::DuplicateKey, r.video_id + " " + to_string(r.rep) + " (" + where + ")");
        }
        records.push_back(std::move(r));
    }
    return Dataset(std::move(records));
}

inline Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str());
}

inline void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
    out << to_csv(ds);
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Splitting and anchors
// ---------------------------------------------------------------------------

struct DatasetSplit {
    Dataset train;
    Dataset test;
};

/// Video-level split: sorted distinct ids are shuffled with Rng(seed), the first
/// floor(n * train_fraction) go to train, the rest to test.
inline DatasetSplit split_by_video(const Dataset& ds, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "train_fraction must lie in (0, 1)");
    }
    auto ids = ds.video_ids();
    if (ids.size() < 2) throw Error(ErrorCode::TooFewVideos, std::to_string(ids.size()) + " distinct videos");

    Rng rng(seed);
    rng.shuffle(ids);
    const auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(ids.size()) * train_fraction));
    const std::set<std::string> train_ids(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));

    std::vector<MeasurementRecord> train, test;
    for (const auto& r : ds.records()) {
        (train_ids.contains(r.video_id) ? train : test).push_back(r);
    }
    return {Dataset(std::move(train)), Dataset(std::move(test))};
}

inline AnchorMeasurement anchor_of(const Dataset& ds, std::string_view video_id, const ConfigSpace& space) {
    const auto* rec = ds.find(video_id, space.anchor());
    if (rec == nullptr) {
        throw Error(ErrorCode::MissingAnchorRecord, std::string(video_id) + " " + to_string(space.anchor()));
    }
    return anchor_from_record(*rec);
}

} // namespace greenladder
