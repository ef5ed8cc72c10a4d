#include "fatigue/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include "fatigue/csv.hpp"
#include "fatigue/error.hpp"

namespace fatigue {

const std::string& modality_name(Modality m) {
    static const std::array<std::string, kModalityCount> names = {
        "rr", "accel", "temp", "resp"};
    return names[index_of(m)];
}

const std::string& modality_tag(Modality m) {
    static const std::array<std::string, kModalityCount> tags = {
        "ECG", "ACCEL", "TEMP", "RESP"};
    return tags[index_of(m)];
}

}  // namespace fatigue

namespace fatigue::ingest {

namespace {

constexpr double kRrLowMs = 200.0;
constexpr double kRrHighMs = 3000.0;

std::int64_t floordiv(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

std::int64_t floormod(std::int64_t a, std::int64_t b) {
    return a - floordiv(a, b) * b;
}

std::string location(const std::string& path, std::size_t line) {
    return path + ":" + std::to_string(line);
}

void require_header(const csv::LineReader& reader,
                    std::string_view got, std::string_view want) {
    if (got != want)
        throw Error(reader.path() + ": expected header \"" + std::string(want) +
                    "\", got \"" + std::string(got) + "\"");
}

}  // namespace

double NominalRates::rate(Modality m) const {
    switch (m) {
        case Modality::RR: return rr_per_s;
        case Modality::ACCEL: return accel_hz;
        case Modality::TEMP: return temp_hz;
        case Modality::RESP: return resp_hz;
    }
    return 0.0;
}

const SampleStream* StreamTable::find(const std::string& subject_id) const {
    auto it = by_subject.find(subject_id);
    return it == by_subject.end() ? nullptr : &it->second;
}

const std::string& slot_name(Slot s) {
    static const std::array<std::string, 4> names = {
        "night", "morning", "afternoon", "evening"};
    return names[static_cast<std::size_t>(s)];
}

bool Segment::empty() const {
    for (const auto& s : slices)
        if (s.size() > 0) return false;
    return true;
}

std::span<const std::int64_t> Segment::timestamps(Modality m) const {
    const auto& slice = slices[index_of(m)];
    const auto* stream = streams[index_of(m)];
    if (!stream || slice.size() == 0) return {};
    return {stream->ts.data() + slice.begin, slice.size()};
}

std::span<const double> Segment::values(Modality m) const {
    const auto& slice = slices[index_of(m)];
    const auto* stream = streams[index_of(m)];
    if (!stream || slice.size() == 0) return {};
    return {stream->x.data() + slice.begin, slice.size()};
}

std::span<const double> Segment::accel_y() const {
    const auto& slice = slices[index_of(Modality::ACCEL)];
    const auto* stream = streams[index_of(Modality::ACCEL)];
    if (!stream || slice.size() == 0) return {};
    return {stream->y.data() + slice.begin, slice.size()};
}

std::span<const double> Segment::accel_z() const {
    const auto& slice = slices[index_of(Modality::ACCEL)];
    const auto* stream = streams[index_of(Modality::ACCEL)];
    if (!stream || slice.size() == 0) return {};
    return {stream->z.data() + slice.begin, slice.size()};
}

std::vector<SubjectRecord> parse_subjects(const std::string& path) {
    csv::LineReader reader(path);
    auto header = reader.next();
    if (!header) throw Error(path + ": empty file, expected subject header");
    require_header(reader, *header, "subject_id,age,bmi");

    std::vector<SubjectRecord> out;
    std::set<std::string> seen;
    std::vector<std::string_view> fields;
    while (auto line = reader.next()) {
        if (line->empty()) continue;
        csv::split(*line, fields);
        if (fields.size() != 3)
            throw Error(location(path, reader.line_number()) +
                        ": expected 3 fields, got " + std::to_string(fields.size()));
        SubjectRecord rec;
        rec.subject_id = std::string(fields[0]);
        if (rec.subject_id.empty())
            throw Error(location(path, reader.line_number()) + ": empty subject_id");
        if (!seen.insert(rec.subject_id).second)
            throw Error(location(path, reader.line_number()) +
                        ": duplicate subject_id \"" + rec.subject_id + "\"");
        auto age = csv::parse_int(fields[1]);
        if (!age)
            throw Error(location(path, reader.line_number()) +
                        ": field \"age\" is not an integer: \"" +
                        std::string(fields[1]) + "\"");
        if (*age <= 0 || *age >= 130)
            throw Error(location(path, reader.line_number()) +
                        ": field \"age\" out of bounds (0, 130): " +
                        std::to_string(*age));
        rec.age = static_cast<int>(*age);
        auto bmi = csv::parse_double(fields[2]);
        if (!bmi || std::isnan(*bmi))
            throw Error(location(path, reader.line_number()) +
                        ": field \"bmi\" is not a number: \"" +
                        std::string(fields[2]) + "\"");
        if (*bmi <= 5.0 || *bmi >= 100.0)
            throw Error(location(path, reader.line_number()) +
                        ": field \"bmi\" out of bounds (5, 100): " +
                        csv::format_double(*bmi));
        rec.bmi = *bmi;
        out.push_back(std::move(rec));
    }
    return out;
}

StreamTable parse_stream(const std::string& path, Modality modality) {
    const bool triaxial = modality == Modality::ACCEL;
    const std::size_t want_fields = triaxial ? 5 : 3;

    csv::LineReader reader(path);
    auto header = reader.next();
    if (!header) throw Error(path + ": empty file, expected stream header");
    require_header(reader, *header,
                   triaxial ? "subject_id,timestamp_ms,x,y,z"
                            : "subject_id,timestamp_ms,value");

    StreamTable table;
    table.modality = modality;
    std::vector<std::string_view> fields;
    SampleStream* current = nullptr;
    std::string current_id;

    while (auto line = reader.next()) {
        if (line->empty()) continue;
        ++table.stats.rows;
        csv::split(*line, fields);
        if (fields.size() != want_fields)
            throw Error(location(path, reader.line_number()) + ": expected " +
                        std::to_string(want_fields) + " fields for " +
                        modality_name(modality) + ", got " +
                        std::to_string(fields.size()));

        auto ts = csv::parse_int(fields[1]);
        auto v0 = csv::parse_double(fields[2]);
        std::optional<double> v1, v2;
        if (triaxial) {
            v1 = csv::parse_double(fields[3]);
            v2 = csv::parse_double(fields[4]);
        }
        const bool parsed = ts && v0 && !std::isnan(*v0) &&
                            (!triaxial || (v1 && v2 && !std::isnan(*v1) &&
                                           !std::isnan(*v2)));
        if (!parsed || fields[0].empty()) {
            ++table.stats.bad_rows;
            continue;
        }

        if (modality == Modality::RR && (*v0 <= kRrLowMs || *v0 >= kRrHighMs)) {
            ++table.stats.dropped_out_of_range;
            continue;
        }

        // Rows usually arrive grouped by subject; cache the last stream.
        if (!current || fields[0] != current_id) {
            current_id = std::string(fields[0]);
            auto [it, inserted] = table.by_subject.try_emplace(current_id);
            current = &it->second;
            if (inserted) {
                current->subject_id = current_id;
                current->modality = modality;
            }
        }
        if (!current->ts.empty() && *ts <= current->ts.back()) {
            ++table.stats.dropped_non_monotonic;
            continue;
        }
        current->ts.push_back(*ts);
        current->x.push_back(*v0);
        if (triaxial) {
            current->y.push_back(*v1);
            current->z.push_back(*v2);
        }
    }

    if (table.stats.rows > 0 &&
        static_cast<double>(table.stats.bad_rows) >
            0.01 * static_cast<double>(table.stats.rows)) {
        throw Error(path + ": " + std::to_string(table.stats.bad_rows) + " of " +
                    std::to_string(table.stats.rows) +
                    " rows unparseable (tolerance 1%)");
    }
    return table;
}

std::vector<FatigueLabel> parse_labels(const std::string& path) {
    csv::LineReader reader(path);
    auto header = reader.next();
    if (!header) throw Error(path + ": empty file, expected label header");
    require_header(reader, *header, "subject_id,slot_start_ms,score");

    std::vector<FatigueLabel> out;
    std::set<std::pair<std::string, std::int64_t>> seen;
    std::vector<std::string_view> fields;
    while (auto line = reader.next()) {
        if (line->empty()) continue;
        csv::split(*line, fields);
        if (fields.size() != 3)
            throw Error(location(path, reader.line_number()) +
                        ": expected 3 fields, got " + std::to_string(fields.size()));
        FatigueLabel label;
        label.subject_id = std::string(fields[0]);
        if (label.subject_id.empty())
            throw Error(location(path, reader.line_number()) + ": empty subject_id");
        auto ts = csv::parse_int(fields[1]);
        if (!ts)
            throw Error(location(path, reader.line_number()) +
                        ": field \"slot_start_ms\" is not an integer");
        label.slot_start_ms = *ts;
        auto score = csv::parse_int(fields[2]);
        if (!score || *score < 0 || *score > 10)
            throw Error(location(path, reader.line_number()) +
                        ": field \"score\" must be an integer in 0..10, got \"" +
                        std::string(fields[2]) + "\"");
        label.score = static_cast<int>(*score);
        if (!seen.insert({label.subject_id, label.slot_start_ms}).second)
            throw Error(location(path, reader.line_number()) +
                        ": duplicate label for subject \"" + label.subject_id +
                        "\" at " + std::to_string(label.slot_start_ms));
        out.push_back(std::move(label));
    }
    return out;
}

std::vector<Segment> build_segments(
    const std::array<const StreamTable*, kModalityCount>& streams,
    const std::vector<FatigueLabel>& labels,
    int tz_offset_minutes) {
    const std::int64_t tz_ms = static_cast<std::int64_t>(tz_offset_minutes) * 60000;

    std::vector<Segment> out;
    out.reserve(labels.size());
    for (const auto& label : labels) {
        const std::int64_t local = label.slot_start_ms + tz_ms;
        if (floormod(local, kSlotMs) != 0)
            throw Error("label for subject \"" + label.subject_id + "\" at " +
                        std::to_string(label.slot_start_ms) +
                        " is not on a 6-hour slot boundary (tz offset " +
                        std::to_string(tz_offset_minutes) + " min)");
        Segment seg;
        seg.subject_id = label.subject_id;
        seg.slot = static_cast<Slot>(floormod(floordiv(local, kSlotMs), 4));
        seg.start_ms = label.slot_start_ms;
        seg.end_ms = label.slot_start_ms + kSlotMs;
        seg.score = label.score;
        for (Modality m : kAllModalities) {
            const std::size_t i = index_of(m);
            const SampleStream* stream =
                streams[i] ? streams[i]->find(label.subject_id) : nullptr;
            seg.streams[i] = stream;
            if (!stream) continue;
            auto lo = std::lower_bound(stream->ts.begin(), stream->ts.end(),
                                       seg.start_ms);
            auto hi = std::lower_bound(lo, stream->ts.end(), seg.end_ms);
            seg.slices[i].begin = static_cast<std::size_t>(lo - stream->ts.begin());
            seg.slices[i].end = static_cast<std::size_t>(hi - stream->ts.begin());
        }
        out.push_back(std::move(seg));
    }

    std::sort(out.begin(), out.end(), [](const Segment& a, const Segment& b) {
        if (a.subject_id != b.subject_id) return a.subject_id < b.subject_id;
        return a.start_ms < b.start_ms;
    });
    return out;
}

std::array<std::array<int, kWindowsPerSegment>, kModalityCount>
window_counts(const Segment& segment) {
    std::array<std::array<int, kWindowsPerSegment>, kModalityCount> counts{};
    for (Modality m : kAllModalities) {
        auto ts = segment.timestamps(m);
        auto& row = counts[index_of(m)];
        for (std::int64_t t : ts) {
            auto w = static_cast<std::size_t>((t - segment.start_ms) / kWindowMs);
            if (w < kWindowsPerSegment) ++row[w];
        }
    }
    return counts;
}

bool window_valid(Modality m, int count, const NominalRates& rates,
                  const WindowPolicy& policy) {
    const double expected =
        rates.rate(m) * (static_cast<double>(kWindowMs) / 1000.0);
    if (static_cast<double>(count) < policy.min_window_coverage * expected)
        return false;
    if (m == Modality::RR && count < policy.rr_min_intervals) return false;
    return count > 0;
}

CoverageReport coverage(const Segment& segment, const NominalRates& rates,
                        const WindowPolicy& policy) {
    CoverageReport report{};
    const auto counts = window_counts(segment);
    const double duration_s =
        static_cast<double>(segment.end_ms - segment.start_ms) / 1000.0;
    for (Modality m : kAllModalities) {
        const std::size_t i = index_of(m);
        const double expected = rates.rate(m) * duration_s;
        const double observed = static_cast<double>(segment.sample_count(m));
        report.fraction[i] =
            expected > 0.0 ? std::clamp(observed / expected, 0.0, 1.0) : 0.0;
        int valid = 0;
        for (int c : counts[i])
            if (window_valid(m, c, rates, policy)) ++valid;
        report.valid_windows[i] = valid;
    }
    return report;
}

}  // namespace fatigue::ingest
