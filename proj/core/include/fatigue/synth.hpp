#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fatigue/matrix.hpp"
#include "fatigue/modality.hpp"

namespace fatigue::synth {

// Friedman #1 regression surface on the first five coordinates.
double friedman1(std::span<const double> x);

enum class FixedEffect { Friedman1, Linear };

struct SynthSpec {
    int n_clusters = 20;
    int points_per_cluster = 40;
    FixedEffect fixed = FixedEffect::Friedman1;
    double sigma_b = 2.0;  // random-intercept std
    double sigma_e = 1.0;  // noise std
    std::uint64_t seed = 0;
};

struct SynthTruth {
    std::vector<double> intercepts;  // per cluster, sample mean recentred to 0
    double sigma_b2 = 0.0;
    double sigma_e2 = 0.0;
    std::vector<double> fixed;  // noiseless fixed-effect value per point
};

// Clustered regression benchmark: 5 signal columns uniform on [0,1]
// plus 5 pure-noise columns, y = f(x) + b_cluster + eps.
struct ClusteredData {
    Matrix X;  // n x 10
    std::vector<double> y;
    std::vector<int> clusters;
    SynthTruth truth;
};

ClusteredData gen_clustered(const SynthSpec& spec);

// synth_features.csv ("cluster,y,x0..x9") and synth_truth.json.
void write_clustered(const ClusteredData& data,
                     const std::string& features_path,
                     const std::string& truth_path);

// Synthetic physiological stream bundle. Rates are what the generator
// actually emits; extract must be pointed at the same numbers, which
// the CLI records in the config it writes next to the bundle.
struct StreamsSpec {
    int n_subjects = 21;
    int days = 7;
    std::uint64_t seed = 0;
    double missingness = 0.0;  // fraction of each subject's timeline lost to dropouts
    double accel_hz = 1.0;
    double temp_hz = 0.25;
    double resp_hz = 0.25;
};

struct StreamsSummary {
    int n_labels = 0;
    std::array<std::size_t, kModalityCount> rows{};
    double rr_per_s = 0.0;  // implied by the mean heart rate
};

// 2021-01-01 00:00:00 UTC; all synthetic timelines start here.
constexpr std::int64_t kSynthEpochMs = 1609459200000;

// Writes subjects/rr/accel/temp/resp/labels CSVs into out_dir. Signals
// follow a per-subject fatigue state shared with the labels, so the
// learning task is solvable. Dropouts are contiguous device-off
// episodes shared across modalities.
StreamsSummary gen_streams(const StreamsSpec& spec, const std::string& out_dir);

}  // namespace fatigue::synth
