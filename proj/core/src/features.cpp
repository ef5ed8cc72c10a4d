#include "fatigue/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "fatigue/csv.hpp"
#include "fatigue/error.hpp"
#include "fatigue/hrv.hpp"
#include "fatigue/stats.hpp"

namespace fatigue::features {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kActiveThresholdG = 0.05;
}  // namespace

const std::string& base_feature_name(std::size_t base_index) {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        v.reserve(kBaseFeatureCount);
        for (const auto& n : hrv::hrv_feature_names()) v.push_back(n);
        for (const auto& n : acti_feature_names()) v.push_back(n);
        for (const auto& n : stats::stat10_names()) v.push_back("temp_" + n);
        for (const auto& n : stats::stat10_names()) v.push_back("resp_" + n);
        return v;
    }();
    return names[base_index];
}

Modality base_feature_modality(std::size_t base_index) {
    if (base_index < kActiBase) return Modality::RR;
    if (base_index < kTempBase) return Modality::ACCEL;
    if (base_index < kRespBase) return Modality::TEMP;
    return Modality::RESP;
}

FeatureMeta::FeatureMeta() {
    dims_.reserve(kFeatureVectorSize);
    modality_.reserve(kFeatureVectorSize);
    for (std::size_t d = 0; d < kBaseFeatureCount; ++d) {
        const Modality m = base_feature_modality(d);
        for (const auto& stat : stats::stat13_names()) {
            dims_.push_back({base_feature_name(d), stat, modality_tag(m)});
            modality_.push_back(m);
        }
    }
}

const FeatureMeta& FeatureMeta::standard() {
    static const FeatureMeta meta;
    return meta;
}

std::string FeatureMeta::dim_name(std::size_t i) const {
    return dims_[i].base + "_" + dims_[i].stat;
}

Modality FeatureMeta::dim_modality(std::size_t i) const { return modality_[i]; }

const std::array<std::string, kActiFeatureCount>& acti_feature_names() {
    static const std::array<std::string, kActiFeatureCount> names = {
        "mean_vm", "std_vm", "min_vm", "max_vm", "median_vm",
        "mean_abs_jerk", "sma", "active_fraction"};
    return names;
}

std::array<double, kActiFeatureCount> acti8(std::span<const std::int64_t> ts_ms,
                                            std::span<const double> x,
                                            std::span<const double> y,
                                            std::span<const double> z) {
    std::array<double, kActiFeatureCount> f;
    f.fill(kNaN);
    const std::size_t n = x.size();
    if (n == 0 || y.size() != n || z.size() != n || ts_ms.size() != n) return f;

    std::vector<double> vm(n);
    double sma = 0.0;
    std::size_t active = 0;
    for (std::size_t i = 0; i < n; ++i) {
        vm[i] = std::sqrt(x[i] * x[i] + y[i] * y[i] + z[i] * z[i]);
        sma += std::abs(x[i]) + std::abs(y[i]) + std::abs(z[i]);
        if (std::abs(vm[i] - 1.0) > kActiveThresholdG) ++active;
    }

    std::vector<double> sorted(vm);
    std::sort(sorted.begin(), sorted.end());
    f[0] = stats::mean(vm);
    f[1] = stats::sample_std(vm);
    f[2] = sorted.front();
    f[3] = sorted.back();
    f[4] = stats::percentile_sorted(sorted, 50.0);

    double jerk_sum = 0.0;
    std::size_t jerk_n = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double dt = static_cast<double>(ts_ms[i + 1] - ts_ms[i]) / 1000.0;
        if (dt <= 0.0) continue;
        jerk_sum += std::abs(vm[i + 1] - vm[i]) / dt;
        ++jerk_n;
    }
    f[5] = jerk_n > 0 ? jerk_sum / static_cast<double>(jerk_n) : 0.0;
    f[6] = sma / static_cast<double>(n);
    f[7] = static_cast<double>(active) / static_cast<double>(n);
    return f;
}

std::vector<Window> slice_windows(const ingest::Segment& segment,
                                  const FeatureConfig& config) {
    std::vector<Window> windows(ingest::kWindowsPerSegment);

    for (Modality m : kAllModalities) {
        const std::size_t mi = index_of(m);
        const auto ts = segment.timestamps(m);
        const auto base = segment.slices[mi].begin;
        std::size_t cursor = 0;
        for (int w = 0; w < ingest::kWindowsPerSegment; ++w) {
            const std::int64_t w_end =
                segment.start_ms + static_cast<std::int64_t>(w + 1) * ingest::kWindowMs;
            const std::size_t begin = cursor;
            while (cursor < ts.size() && ts[cursor] < w_end) ++cursor;
            windows[w].index = w;
            windows[w].slices[mi] = {base + begin, base + cursor};
            windows[w].valid[mi] =
                ingest::window_valid(m, static_cast<int>(cursor - begin),
                                     config.rates, config.policy);
        }
    }
    return windows;
}

WindowFeatureMatrix window_features(const ingest::Segment& segment,
                                    const FeatureConfig& config) {
    WindowFeatureMatrix out;
    out.values = Matrix(kBaseFeatureCount, ingest::kWindowsPerSegment, kNaN);
    out.valid.assign(kBaseFeatureCount * ingest::kWindowsPerSegment, 0);

    const auto windows = slice_windows(segment, config);

    auto emit = [&](std::size_t base_row, std::size_t t, std::span<const double> vals) {
        for (std::size_t k = 0; k < vals.size(); ++k) {
            const std::size_t d = base_row + k;
            out.values.at(d, t) = vals[k];
            out.valid[d * ingest::kWindowsPerSegment + t] =
                std::isfinite(vals[k]) ? 1 : 0;
        }
    };

    for (const auto& w : windows) {
        const auto t = static_cast<std::size_t>(w.index);
        if (w.valid[index_of(Modality::RR)]) {
            const auto slice = w.slices[index_of(Modality::RR)];
            const auto* stream = segment.streams[index_of(Modality::RR)];
            const auto vals = hrv::hrv30(
                {stream->x.data() + slice.begin, slice.size()});
            emit(kHrvBase, t, vals);
        }
        if (w.valid[index_of(Modality::ACCEL)]) {
            const auto slice = w.slices[index_of(Modality::ACCEL)];
            const auto* stream = segment.streams[index_of(Modality::ACCEL)];
            const auto vals = acti8(
                {stream->ts.data() + slice.begin, slice.size()},
                {stream->x.data() + slice.begin, slice.size()},
                {stream->y.data() + slice.begin, slice.size()},
                {stream->z.data() + slice.begin, slice.size()});
            emit(kActiBase, t, vals);
        }
        if (w.valid[index_of(Modality::TEMP)]) {
            const auto slice = w.slices[index_of(Modality::TEMP)];
            const auto* stream = segment.streams[index_of(Modality::TEMP)];
            const auto vals = stats::stat10(
                {stream->x.data() + slice.begin, slice.size()});
            emit(kTempBase, t, vals);
        }
        if (w.valid[index_of(Modality::RESP)]) {
            const auto slice = w.slices[index_of(Modality::RESP)];
            const auto* stream = segment.streams[index_of(Modality::RESP)];
            const auto vals = stats::stat10(
                {stream->x.data() + slice.begin, slice.size()});
            emit(kRespBase, t, vals);
        }
    }
    return out;
}

SegmentFeatureResult segment_features(const ingest::Segment& segment,
                                      const FeatureConfig& config) {
    SegmentFeatureResult result;

    const auto windows = slice_windows(segment, config);
    for (const auto& w : windows) {
        bool all = true;
        for (Modality m : kAllModalities) {
            if (w.valid[index_of(m)])
                ++result.valid_windows[index_of(m)];
            else
                all = false;
        }
        if (all) ++result.windows_all_valid;
    }

    bool any_modality_usable = false;
    for (int c : result.valid_windows)
        if (c >= config.policy.min_valid_windows) any_modality_usable = true;
    if (!any_modality_usable) {
        result.reject_reason = "fewer than " +
                               std::to_string(config.policy.min_valid_windows) +
                               " valid windows in every modality";
        return result;
    }

    const auto matrix = window_features(segment, config);

    DataPoint point;
    point.subject_id = segment.subject_id;
    point.segment_start_ms = segment.start_ms;
    point.score = segment.score;
    point.values.assign(kFeatureVectorSize, kNaN);
    point.valid.assign(kFeatureVectorSize, 0);

    std::vector<double> series;
    series.reserve(ingest::kWindowsPerSegment);
    for (std::size_t d = 0; d < kBaseFeatureCount; ++d) {
        series.clear();
        for (std::size_t t = 0; t < ingest::kWindowsPerSegment; ++t)
            if (matrix.cell_valid(d, t)) series.push_back(matrix.values.at(d, t));
        if (static_cast<int>(series.size()) < config.policy.min_valid_windows)
            continue;
        const auto summary = stats::stat13(series);
        for (std::size_t s = 0; s < stats::kStat13; ++s) {
            const std::size_t dim = d * stats::kStat13 + s;
            point.values[dim] = summary[s];
            point.valid[dim] = std::isfinite(summary[s]) ? 1 : 0;
        }
    }
    result.point = std::move(point);
    return result;
}

void write_features_csv(const std::string& path,
                        const std::vector<DataPoint>& points) {
    csv::Writer out(path);
    out.write("subject_id,segment_start_ms,score");
    for (std::size_t i = 0; i < kFeatureVectorSize; ++i) {
        out.write(",f");
        out.write_int(static_cast<std::int64_t>(i));
    }
    out.write("\n");
    for (const auto& p : points) {
        out.write(p.subject_id);
        out.write(",");
        out.write_int(p.segment_start_ms);
        out.write(",");
        out.write_int(p.score);
        for (std::size_t i = 0; i < kFeatureVectorSize; ++i) {
            out.write(",");
            out.write_double(p.valid[i] ? p.values[i] : kNaN);
        }
        out.write("\n");
    }
    out.close();
}

std::vector<DataPoint> read_features_csv(const std::string& path) {
    csv::LineReader reader(path);
    auto header = reader.next();
    if (!header) throw Error(path + ": empty features file");

    std::vector<std::string_view> fields;
    csv::split(*header, fields);
    if (fields.size() != 3 + kFeatureVectorSize || fields[0] != "subject_id" ||
        fields[1] != "segment_start_ms" || fields[2] != "score")
        throw Error(path + ": unexpected features header");

    std::vector<DataPoint> points;
    while (auto line = reader.next()) {
        if (line->empty()) continue;
        csv::split(*line, fields);
        if (fields.size() != 3 + kFeatureVectorSize)
            throw Error(path + ":" + std::to_string(reader.line_number()) +
                        ": wrong field count");
        DataPoint p;
        p.subject_id = std::string(fields[0]);
        auto ts = csv::parse_int(fields[1]);
        auto score = csv::parse_int(fields[2]);
        if (!ts || !score)
            throw Error(path + ":" + std::to_string(reader.line_number()) +
                        ": bad segment_start_ms or score");
        p.segment_start_ms = *ts;
        p.score = static_cast<int>(*score);
        p.values.resize(kFeatureVectorSize);
        p.valid.resize(kFeatureVectorSize);
        for (std::size_t i = 0; i < kFeatureVectorSize; ++i) {
            auto v = csv::parse_double(fields[3 + i]);
            if (!v)
                throw Error(path + ":" + std::to_string(reader.line_number()) +
                            ": bad value in f" + std::to_string(i));
            p.values[i] = *v;
            p.valid[i] = std::isfinite(*v) ? 1 : 0;
        }
        points.push_back(std::move(p));
    }
    return points;
}

void write_feature_meta_json(const std::string& path) {
    const auto& meta = FeatureMeta::standard();
    nlohmann::json dims = nlohmann::json::array();
    for (std::size_t i = 0; i < meta.size(); ++i) {
        const auto& d = meta.dim(i);
        dims.push_back({{"index", i},
                        {"name", meta.dim_name(i)},
                        {"base", d.base},
                        {"modality", d.modality},
                        {"stat", d.stat}});
    }
    nlohmann::json doc = {{"format_version", 1},
                          {"dimensions", dims}};
    csv::Writer out(path);
    out.write(doc.dump(2));
    out.write("\n");
    out.close();
}

}  // namespace fatigue::features
