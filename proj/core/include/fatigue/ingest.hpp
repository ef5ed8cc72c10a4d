#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fatigue/modality.hpp"

namespace fatigue::ingest {

// Segments are 6-hour blocks aligned to the four daily report slots,
// cut into 5-minute windows downstream.
constexpr std::int64_t kSlotMs = 6LL * 3600 * 1000;
constexpr std::int64_t kWindowMs = 5LL * 60 * 1000;
constexpr int kWindowsPerSegment = 72;

// Nominal sampling rates, used only as coverage denominators. The study
// hardware never documented its effective rates, so these are
// configurable; defaults assume 72 bpm for RR and typical device rates
// for the rest.
struct NominalRates {
    double rr_per_s = 1.2;
    double accel_hz = 30.0;
    double temp_hz = 0.25;
    double resp_hz = 0.25;

    double rate(Modality m) const;
};

// When a 5-minute window counts as usable for a modality, and how many
// usable windows a base feature needs before its segment-level summary
// is considered valid.
struct WindowPolicy {
    double min_window_coverage = 0.5;
    int rr_min_intervals = 100;
    int min_valid_windows = 12;
};

struct SubjectRecord {
    std::string subject_id;
    int age = 0;
    double bmi = 0.0;
};

// One subject's time-ordered samples for one modality. Scalar
// modalities use `x` only; ACCEL fills x/y/z.
struct SampleStream {
    std::string subject_id;
    Modality modality = Modality::RR;
    std::vector<std::int64_t> ts;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> z;

    std::size_t size() const { return ts.size(); }
};

struct StreamStats {
    std::size_t rows = 0;                // data rows seen
    std::size_t bad_rows = 0;            // unparseable, within tolerance
    std::size_t dropped_out_of_range = 0;
    std::size_t dropped_non_monotonic = 0;
};

// All subjects' streams from one CSV file.
struct StreamTable {
    Modality modality = Modality::RR;
    std::map<std::string, SampleStream> by_subject;
    StreamStats stats;

    const SampleStream* find(const std::string& subject_id) const;
};

struct FatigueLabel {
    std::string subject_id;
    std::int64_t slot_start_ms = 0;
    int score = 0;
};

enum class Slot : int { Night = 0, Morning = 1, Afternoon = 2, Evening = 3 };
const std::string& slot_name(Slot s);

// Half-open index range into a SampleStream's arrays.
struct SliceRef {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const { return end - begin; }
};

// One label-aligned 6-hour block. Holds views into the parsed streams;
// the StreamTables must outlive the segments built from them.
struct Segment {
    std::string subject_id;
    Slot slot = Slot::Night;
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;
    int score = 0;
    std::array<const SampleStream*, kModalityCount> streams{};  // may be null
    std::array<SliceRef, kModalityCount> slices{};

    std::size_t sample_count(Modality m) const { return slices[index_of(m)].size(); }
    bool empty() const;

    std::span<const std::int64_t> timestamps(Modality m) const;
    std::span<const double> values(Modality m) const;  // x channel
    std::span<const double> accel_y() const;
    std::span<const double> accel_z() const;
};

struct CoverageReport {
    std::array<double, kModalityCount> fraction{};     // observed / expected, clamped to [0,1]
    std::array<int, kModalityCount> valid_windows{};   // 5-min windows meeting the policy
};

// --- parsing ---------------------------------------------------------

// subjects.csv: header "subject_id,age,bmi". Rejects duplicates,
// non-numeric fields and out-of-bounds values (0 < age < 130,
// 5 < bmi < 100) with the offending row in the message.
std::vector<SubjectRecord> parse_subjects(const std::string& path);

// rr/temp/resp.csv: "subject_id,timestamp_ms,value";
// accel.csv: "subject_id,timestamp_ms,x,y,z".
// Per subject, timestamps must come out strictly increasing; duplicate or
// retrograde rows are dropped and counted. RR values outside (200, 3000) ms
// are dropped and counted. Rows with the wrong field count are schema
// errors; rows with unparseable numbers are tolerated up to 1% of the file.
StreamTable parse_stream(const std::string& path, Modality modality);

// labels.csv: "subject_id,slot_start_ms,score", score an integer 0..10.
// Duplicate (subject, slot) pairs are errors. Slot-boundary alignment is
// checked later in build_segments, which knows the timezone offset.
std::vector<FatigueLabel> parse_labels(const std::string& path);

// --- segmentation ----------------------------------------------------

// One segment per label, with every modality clipped to
// [slot_start, slot_start + 6h). Labels whose slot_start is not on a
// 00/06/12/18 local-time boundary (after applying tz_offset_minutes)
// are errors. Output is sorted by (subject_id, start_ms).
std::vector<Segment> build_segments(
    const std::array<const StreamTable*, kModalityCount>& streams,
    const std::vector<FatigueLabel>& labels,
    int tz_offset_minutes);

// Per-window sample counts (72 buckets per modality).
std::array<std::array<int, kWindowsPerSegment>, kModalityCount>
window_counts(const Segment& segment);

// Usability rule for one window: coverage against the nominal rate must
// reach min_window_coverage, and RR additionally needs rr_min_intervals.
bool window_valid(Modality m, int count, const NominalRates& rates,
                  const WindowPolicy& policy);

CoverageReport coverage(const Segment& segment, const NominalRates& rates,
                        const WindowPolicy& policy);

}  // namespace fatigue::ingest
