#include "fatigue/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fatigue::stats {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

double mean(std::span<const double> xs) {
    if (xs.empty()) return kNaN;
    double sum = 0.0;
    for (double x : xs) sum += x;
    return sum / static_cast<double>(xs.size());
}

double sample_std(std::span<const double> xs) {
    const std::size_t n = xs.size();
    if (n == 0) return kNaN;
    if (n < 2) return 0.0;
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) {
        const double d = x - m;
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(n - 1));
}

namespace {

// Central population moments m2, m3, m4 in one pass over centered values.
struct Moments {
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
};

Moments central_moments(std::span<const double> xs) {
    Moments mom;
    const double m = mean(xs);
    for (double x : xs) {
        const double d = x - m;
        const double d2 = d * d;
        mom.m2 += d2;
        mom.m3 += d2 * d;
        mom.m4 += d2 * d2;
    }
    const double n = static_cast<double>(xs.size());
    mom.m2 /= n;
    mom.m3 /= n;
    mom.m4 /= n;
    return mom;
}

}  // namespace

double skewness(std::span<const double> xs) {
    if (xs.empty()) return kNaN;
    const Moments m = central_moments(xs);
    if (m.m2 <= 0.0) return 0.0;
    return m.m3 / std::pow(m.m2, 1.5);
}

double excess_kurtosis(std::span<const double> xs) {
    if (xs.empty()) return kNaN;
    const Moments m = central_moments(xs);
    if (m.m2 <= 0.0) return 0.0;
    return m.m4 / (m.m2 * m.m2) - 3.0;
}

double energy(std::span<const double> xs) {
    if (xs.empty()) return kNaN;
    double sum = 0.0;
    for (double x : xs) sum += x * x;
    return sum / static_cast<double>(xs.size());
}

double percentile_sorted(std::span<const double> sorted, double p) {
    const std::size_t n = sorted.size();
    if (n == 0) return kNaN;
    if (n == 1) return sorted[0];
    double rank = (static_cast<double>(n) - 1.0) * p / 100.0;
    rank = std::clamp(rank, 0.0, static_cast<double>(n) - 1.0);
    const std::size_t lo = static_cast<std::size_t>(rank);
    const double frac = rank - static_cast<double>(lo);
    if (frac == 0.0 || lo + 1 >= n) return sorted[lo];
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double percentile(std::span<const double> xs, double p) {
    if (xs.empty()) return kNaN;
    std::vector<double> buf(xs.begin(), xs.end());
    std::sort(buf.begin(), buf.end());
    return percentile_sorted(buf, p);
}

double max_drawdown(std::span<const double> xs) {
    if (xs.empty()) return kNaN;
    double peak = xs[0];
    double worst = 0.0;
    for (double x : xs) {
        peak = std::max(peak, x);
        worst = std::max(worst, peak - x);
    }
    return worst;
}

std::array<double, kStat10> stat10(std::span<const double> xs) {
    std::array<double, kStat10> out;
    out.fill(kNaN);
    if (xs.empty()) return out;
    std::vector<double> sorted(xs.begin(), xs.end());
    std::sort(sorted.begin(), sorted.end());
    out[0] = mean(xs);
    out[1] = sample_std(xs);
    out[2] = sorted.front();
    out[3] = sorted.back();
    out[4] = skewness(xs);
    out[5] = excess_kurtosis(xs);
    out[6] = percentile_sorted(sorted, 25.0);
    out[7] = percentile_sorted(sorted, 50.0);
    out[8] = percentile_sorted(sorted, 75.0);
    out[9] = max_drawdown(xs);
    return out;
}

const std::array<std::string, kStat10>& stat10_names() {
    static const std::array<std::string, kStat10> names = {
        "mean", "std", "min", "max", "skew", "kurt", "p25", "p50", "p75",
        "max_drop"};
    return names;
}

std::array<double, kStat13> stat13(std::span<const double> xs) {
    std::array<double, kStat13> out;
    out.fill(kNaN);
    if (xs.empty()) return out;
    std::vector<double> sorted(xs.begin(), xs.end());
    std::sort(sorted.begin(), sorted.end());
    const double p25 = percentile_sorted(sorted, 25.0);
    const double p75 = percentile_sorted(sorted, 75.0);
    out[0] = percentile_sorted(sorted, 10.0);
    out[1] = p25;
    out[2] = percentile_sorted(sorted, 50.0);
    out[3] = p75;
    out[4] = percentile_sorted(sorted, 90.0);
    out[5] = mean(xs);
    out[6] = sorted.front();
    out[7] = sorted.back();
    out[8] = sample_std(xs);
    out[9] = skewness(xs);
    out[10] = excess_kurtosis(xs);
    out[11] = p75 - p25;
    out[12] = energy(xs);
    return out;
}

const std::array<std::string, kStat13>& stat13_names() {
    static const std::array<std::string, kStat13> names = {
        "p10", "p25", "p50", "p75", "p90", "mean", "min", "max",
        "std", "skew", "kurt", "iqr", "energy"};
    return names;
}

}  // namespace fatigue::stats
