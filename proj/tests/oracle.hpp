#pragma once

// Brute-force reference implementations used only by tests. Everything
// here is written directly from the definitions, independent of the
// library code it checks, and favors clarity over speed.

#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <utility>
#include <vector>

namespace oracle {

double mean(std::span<const double> xs);
double sample_std(std::span<const double> xs);
double skewness(std::span<const double> xs);
double excess_kurtosis(std::span<const double> xs);
double energy(std::span<const double> xs);
double percentile(std::span<const double> xs, double p);
double max_drawdown(std::span<const double> xs);  // O(n^2) peak-trough scan

std::array<double, 10> stat10(std::span<const double> xs);
std::array<double, 13> stat13(std::span<const double> xs);

double sdnn(std::span<const double> rr);
double rmssd(std::span<const double> rr);
double sdsd(std::span<const double> rr);
double pnn(std::span<const double> rr, double threshold_ms);

// Direct-definition entropies, m = 2, Chebyshev distance.
double sampen(std::span<const double> xs, double r);
double apen(std::span<const double> xs, double r);

// Mixed-model quantities computed with an explicit V_i = s_b^2 J + s^2 I
// matrix per cluster and numeric Gauss-Jordan inversion.
std::map<int, double> dense_estep(std::span<const double> residuals,
                                  std::span<const int> clusters, double sigma2,
                                  double sigma_b2);
std::pair<double, double> dense_update(std::span<const double> residuals,
                                       const std::map<int, double>& b,
                                       std::span<const int> clusters,
                                       double sigma2, double sigma_b2);
double dense_gll(std::span<const double> residuals,
                 const std::map<int, double>& b, std::span<const int> clusters,
                 double sigma2, double sigma_b2);

}  // namespace oracle
