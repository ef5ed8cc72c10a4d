#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fatigue/ingest.hpp"
#include "fatigue/matrix.hpp"

namespace fatigue::features {

// 30 RR + 8 actigraphy + 10 temperature + 10 respiration base features
// per 5-minute window, summarized over the window axis by 13 statistics.
constexpr std::size_t kBaseFeatureCount = 58;
constexpr std::size_t kFeatureVectorSize = 58 * 13;  // 754

constexpr std::size_t kHrvBase = 0;     // 30 rows
constexpr std::size_t kActiBase = 30;   // 8 rows
constexpr std::size_t kTempBase = 38;   // 10 rows
constexpr std::size_t kRespBase = 48;   // 10 rows

struct FeatureConfig {
    ingest::NominalRates rates;
    ingest::WindowPolicy policy;
};

// Base-feature name and owning modality for row d of the window matrix.
const std::string& base_feature_name(std::size_t base_index);
Modality base_feature_modality(std::size_t base_index);

// Metadata for one of the 754 output dimensions.
struct FeatureDim {
    std::string base;      // e.g. "rmssd"
    std::string stat;      // e.g. "p90"
    std::string modality;  // "ECG", "ACCEL", "TEMP", "RESP"
};

// dim = base_index * 13 + stat_index; names look like "rmssd_p90".
class FeatureMeta {
public:
    static const FeatureMeta& standard();

    std::size_t size() const { return dims_.size(); }
    const FeatureDim& dim(std::size_t i) const { return dims_[i]; }
    std::string dim_name(std::size_t i) const;
    // Modality of dimension i as an index into kAllModalities.
    Modality dim_modality(std::size_t i) const;

private:
    FeatureMeta();
    std::vector<FeatureDim> dims_;
    std::vector<Modality> modality_;
};

// The 8 vector-magnitude actigraphy features:
// mean_vm, std_vm, min_vm, max_vm, median_vm, mean_abs_jerk, sma,
// active_fraction. Jerk uses real timestamp spacing (g per second);
// active samples deviate from 1 g by more than 0.05 g.
constexpr std::size_t kActiFeatureCount = 8;
const std::array<std::string, kActiFeatureCount>& acti_feature_names();
std::array<double, kActiFeatureCount> acti8(std::span<const std::int64_t> ts_ms,
                                            std::span<const double> x,
                                            std::span<const double> y,
                                            std::span<const double> z);

// One 5-minute window shell: per-modality index ranges into the parent
// segment's streams, plus the usability flag per modality.
struct Window {
    int index = 0;
    std::array<ingest::SliceRef, kModalityCount> slices{};
    std::array<bool, kModalityCount> valid{};
};

std::vector<Window> slice_windows(const ingest::Segment& segment,
                                  const FeatureConfig& config);

// 58 x 72 window-feature matrix with an explicit validity mask; cells in
// unusable windows or with undefined values are masked, never zeroed.
struct WindowFeatureMatrix {
    Matrix values;               // kBaseFeatureCount x kWindowsPerSegment
    std::vector<std::uint8_t> valid;  // same shape, row-major

    bool cell_valid(std::size_t d, std::size_t t) const {
        return valid[d * ingest::kWindowsPerSegment + t] != 0;
    }
};

WindowFeatureMatrix window_features(const ingest::Segment& segment,
                                    const FeatureConfig& config);

// One accepted segment: the 754-vector (NaN where masked) plus its label.
struct DataPoint {
    std::string subject_id;
    std::int64_t segment_start_ms = 0;
    int score = 0;
    std::vector<double> values;       // kFeatureVectorSize
    std::vector<std::uint8_t> valid;  // kFeatureVectorSize
};

struct SegmentFeatureResult {
    std::optional<DataPoint> point;  // empty when rejected
    std::array<int, kModalityCount> valid_windows{};
    int windows_all_valid = 0;
    std::string reject_reason;  // empty when accepted
};

// Builds the window matrix, then summarizes each base feature over its
// valid windows with the 13 statistics. A base feature needs
// policy.min_valid_windows supporting windows; a segment is rejected
// only if no modality reaches that many usable windows.
SegmentFeatureResult segment_features(const ingest::Segment& segment,
                                      const FeatureConfig& config);

// --- files -----------------------------------------------------------

// features.csv: "subject_id,segment_start_ms,score,f0..f753", masked
// dimensions written as "nan". Shortest round-trip float formatting, so
// identical inputs produce identical bytes.
void write_features_csv(const std::string& path,
                        const std::vector<DataPoint>& points);
std::vector<DataPoint> read_features_csv(const std::string& path);

// feature_meta.json: one record per dimension (index, base, modality,
// statistic).
void write_feature_meta_json(const std::string& path);

}  // namespace fatigue::features
