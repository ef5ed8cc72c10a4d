#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fatigue/forest.hpp"
#include "fatigue/ingest.hpp"
#include "fatigue/matrix.hpp"

namespace fatigue::merf {

enum class ClusterMode { Age, Bmi, AgeAndBmi };
const std::string& cluster_mode_name(ClusterMode mode);
ClusterMode cluster_mode_from_name(const std::string& name);

// Demographic bins with quantile edges learned from training subjects.
// Values outside the learned range clamp into the edge bins. With both
// variables, cluster id = age_bin * n_bins + bmi_bin.
struct ClusterScheme {
    ClusterMode mode = ClusterMode::Age;
    int n_bins = 3;
    std::vector<double> age_edges;  // n_bins - 1 ascending quantile cuts
    std::vector<double> bmi_edges;

    static ClusterScheme fit(ClusterMode mode,
                             std::span<const ingest::SubjectRecord> subjects,
                             int n_bins = 3);

    int cluster_of(double age, double bmi) const;
    int n_clusters() const;
};

std::map<std::string, int> assign_clusters(
    std::span<const ingest::SubjectRecord> subjects,
    const ClusterScheme& scheme);

struct MerfParams {
    forest::ForestParams forest;
    int max_em_iters = 50;
    double gll_rel_tol = 1e-4;
    double initial_sigma2 = 1.0;
    double initial_sigma_b2 = 1.0;
};

struct EmIteration {
    double gll = 0.0;
    double sigma2 = 0.0;
    double sigma_b2 = 0.0;
    double max_delta_b = 0.0;
};

// Random-intercept BLUP per cluster: b_i = n_i s_b^2 rbar_i /
// (n_i s_b^2 + s^2), the scalar form of s_b^2 1' V_i^-1 r_i with
// V_i = s_b^2 J + s^2 I. Only clusters present in `clusters` appear in
// the result.
std::map<int, double> estep(std::span<const double> residuals,
                            std::span<const int> clusters, double sigma2,
                            double sigma_b2);

// One EM update of the variance components (intercept-only design):
//   s^2'   = (1/N) sum_i [ e_i'e_i + s^2 (n_i - s^2 tr(V_i^-1)) ]
//   s_b^2' = (1/q) sum_i [ b_i^2 + s_b^2 - s_b^2 (1' V_i^-1 1) s_b^2 ]
// with e_i = r_i - b_i. The residual variance is floored at 1e-8.
std::pair<double, double> update_variance(std::span<const double> residuals,
                                          const std::map<int, double>& b,
                                          std::span<const int> clusters,
                                          double sigma2, double sigma_b2);

// Generalized log-likelihood criterion monitored for convergence:
// sum_i [ e_i'e_i / s^2 + b_i^2 / s_b^2 + n_i ln s^2 + ln s_b^2 ],
// with the intercept penalty terms dropped when s_b^2 == 0.
double gll(std::span<const double> residuals, const std::map<int, double>& b,
           std::span<const int> clusters, double sigma2, double sigma_b2);

struct MerfModel {
    forest::Forest fixed_effect;
    std::map<int, double> intercepts;
    double sigma2 = 1.0;
    double sigma_b2 = 1.0;
    std::optional<ClusterScheme> scheme;  // absent when clusters were supplied directly
    // Criterion at the starting point (zero intercepts, initial
    // variances, first fitted forest), the baseline the trace descends
    // from. Trace entries hold post-update values only.
    double initial_gll = 0.0;
    std::vector<EmIteration> trace;
};

// EM alternation: fit the forest on y with the current intercepts
// removed, re-estimate intercepts from the forest residuals, update the
// variance components, and stop on relative GLL change < gll_rel_tol or
// after max_em_iters. The forest seed is reused across iterations so EM
// progress reflects residual changes only. After the loop the
// intercepts are refreshed against the final variances.
MerfModel fit_merf(const Matrix& X, std::span<const double> y,
                   std::span<const int> clusters, const MerfParams& params);

// Fixed effect plus the cluster intercept when the cluster was seen in
// training; exactly the forest prediction otherwise.
double predict(const MerfModel& model, std::span<const double> x,
               std::optional<int> cluster);

std::string to_json(const MerfModel& model);
MerfModel merf_from_json(const std::string& text);
void save_merf(const MerfModel& model, const std::string& path);
MerfModel load_merf(const std::string& path);

}  // namespace fatigue::merf
