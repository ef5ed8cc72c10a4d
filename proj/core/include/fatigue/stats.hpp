#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace fatigue::stats {

// Conventions used throughout (fixed so tests can pin values):
//  - standard deviation divides by n-1; n < 2 gives 0
//  - skewness g1 = m3 / m2^1.5 and excess kurtosis g2 = m4 / m2^2 - 3
//    from population moments; zero-variance input gives 0 for both
//  - percentiles interpolate linearly at rank (n-1) * p / 100
//  - energy is the mean of squares
double mean(std::span<const double> xs);
double sample_std(std::span<const double> xs);
double skewness(std::span<const double> xs);
double excess_kurtosis(std::span<const double> xs);
double energy(std::span<const double> xs);

// Percentile of an unsorted series (copies + sorts internally).
double percentile(std::span<const double> xs, double p);
// Percentile over an already ascending-sorted series.
double percentile_sorted(std::span<const double> sorted, double p);

// Largest peak-to-subsequent-trough decrease: max over t of
// (running max up to t) - x[t]. Zero for monotone or constant input.
double max_drawdown(std::span<const double> xs);

// Per-window descriptive block for the scalar modalities:
// mean, std, min, max, skewness, kurtosis, p25, p50, p75, max_drop.
constexpr std::size_t kStat10 = 10;
std::array<double, kStat10> stat10(std::span<const double> xs);
const std::array<std::string, kStat10>& stat10_names();

// Segment-level summary of one base feature across its valid windows:
// p10, p25, p50, p75, p90, mean, min, max, std, skewness, kurtosis,
// iqr, energy.
constexpr std::size_t kStat13 = 13;
std::array<double, kStat13> stat13(std::span<const double> xs);
const std::array<std::string, kStat13>& stat13_names();

}  // namespace fatigue::stats
