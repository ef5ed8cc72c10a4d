#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace fatigue::hrv {

// The 30 per-window RR features, in the order produced by hrv30():
//   0..13  time domain: mean_nn, sdnn, rmssd, sdsd, pnn50, pnn20, cvnn,
//          cvsd, median_nn, mad_nn, iqr_nn, mean_hr, min_hr, max_hr
//  14..21  frequency domain (4 Hz resampled tachogram, Welch):
//          vlf_power, lf_power, hf_power, total_power, lf_norm, hf_norm,
//          lf_hf, hf_peak_freq
//  22..29  nonlinear: sd1, sd2, sd1_sd2, ellipse_area, sampen, apen,
//          dfa_alpha1, tri_index
// Inputs are cleaned RR intervals in ms (positive). Quantities that are
// undefined for a given input come back NaN and are masked downstream,
// never zeroed.
constexpr std::size_t kHrvFeatureCount = 30;

const std::array<std::string, kHrvFeatureCount>& hrv_feature_names();

std::array<double, kHrvFeatureCount> hrv30(std::span<const double> rr_ms);

// --- building blocks, exposed for testing ----------------------------

// Evenly resampled tachogram: beat k is placed at the cumulative sum of
// intervals up to and including k (seconds); values between beats are
// linearly interpolated on a uniform 1/fs grid. Empty result if fewer
// than 2 intervals.
std::vector<double> resample_tachogram(std::span<const double> rr_ms, double fs_hz);

// One-sided Welch periodogram, Hann window, 50% overlap, per-segment
// mean removal. Segment length is the largest power of two <= nperseg
// (and <= signal length); empty result if the signal is shorter than 8.
struct Psd {
    std::vector<double> freq;   // Hz, 0..fs/2
    std::vector<double> power;  // density, value^2 per Hz
};
Psd welch_psd(std::span<const double> signal, double fs_hz, std::size_t nperseg = 256);

// Integrated power over frequencies f with lo < f <= hi.
double band_power(const Psd& psd, double lo_hz, double hi_hz);

// Sample entropy (Richman-Moorman pair counting) and approximate
// entropy (Pincus, self-matches included), both for m = 2 with
// Chebyshev distance, computed in one fused pass. Sampen is NaN when no
// template pairs match.
struct EntropyPair {
    double sampen;
    double apen;
};
EntropyPair entropies_m2(std::span<const double> xs, double r);

// Detrended fluctuation slope over box sizes 4..16 (log-log OLS fit).
// NaN below 32 points or for constant input.
double dfa_alpha1(std::span<const double> xs);

// Count / max histogram bin height, bin width 7.8125 ms.
double triangular_index(std::span<const double> rr_ms);

}  // namespace fatigue::hrv
