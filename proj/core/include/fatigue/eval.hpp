#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fatigue/features.hpp"
#include "fatigue/ingest.hpp"
#include "fatigue/matrix.hpp"
#include "fatigue/merf.hpp"
#include "fatigue/modality.hpp"

namespace fatigue::eval {

// Seeded shuffle of 0..n-1 dealt round-robin, so fold sizes differ by
// at most one.
std::vector<std::vector<int>> kfold(int n, int k, std::uint64_t seed);

struct MetricSet {
    double rmse = 0.0;
    double mae = 0.0;
    double mape = 0.0;  // NaN when every target is zero
    int n = 0;
    int mape_excluded = 0;  // targets equal to zero
};

MetricSet metrics(std::span<const double> y, std::span<const double> yhat);

// Sample Pearson r; NaN when either side has zero variance.
double pearson(std::span<const double> y, std::span<const double> yhat);

struct LinearModel {
    std::vector<double> weights;
    double intercept = 0.0;
};

// Ridge on centered data: w = (Xc'Xc + lambda I)^-1 Xc'y, intercept
// mean(y) - w'mean(x). lambda = 0 on a singular system throws.
LinearModel fit_linear_baseline(const Matrix& X, std::span<const double> y,
                                double lambda = 1.0);
double predict_linear(const LinearModel& model, std::span<const double> x);

struct ModalityImportance {
    int top_k = 15;
    std::array<int, kModalityCount> counts{};
    std::array<double, kModalityCount> score_sum{};
    std::vector<std::size_t> top_dims;  // descending importance, ties to lower index
};

ModalityImportance modality_importance(std::span<const double> importance,
                                       const features::FeatureMeta& meta,
                                       int top_k = 15);

enum class ModelKind {
    Linear,
    RandomForest,
    MerfAge,
    MerfBmi,
    MerfAgeBmi,
    MerfProvided,  // clusters supplied by the dataset instead of demographics
};
const std::string& model_label(ModelKind kind);       // e.g. "merf_age_bmi"
const std::string& model_display_name(ModelKind kind);  // e.g. "MERF Age&BMI"
ModelKind model_kind_from_label(const std::string& label);

struct Dataset {
    std::vector<std::string> subject_id;  // one entry per row
    std::vector<std::int64_t> segment_start_ms;
    Matrix X;
    std::vector<double> y;
    std::vector<ingest::SubjectRecord> subjects;  // demographics for MERF modes
    std::vector<int> provided_clusters;           // used by MerfProvided only
};

enum class SplitMode { Record, Subject };

struct CvParams {
    int k = 5;
    std::uint64_t seed = 0;
    SplitMode split = SplitMode::Record;
    forest::ForestParams forest;
    int em_iters = 50;
    double gll_rel_tol = 1e-4;
    double ridge_lambda = 1.0;
    int cluster_bins = 3;
};

struct CvReport {
    std::string label;
    std::vector<MetricSet> folds;
    double rmse_mean = 0.0, rmse_std = 0.0;
    double mae_mean = 0.0, mae_std = 0.0;
    double mape_mean = 0.0, mape_std = 0.0;
    double pooled_pearson = 0.0;
    std::vector<double> importance;  // fold-averaged, empty for the linear model
    std::vector<double> sigma2_per_fold;    // MERF modes only
    std::vector<double> sigma_b2_per_fold;  // MERF modes only
    std::vector<double> oof_pred;  // out-of-fold prediction per row
};

// Everything learned per fold, captured for leakage checks.
struct FoldDebug {
    std::vector<int> train_rows;
    std::vector<int> test_rows;
    std::vector<double> medians;
    std::optional<merf::ClusterScheme> scheme;
};

// Per-column median of the finite entries over the given rows; 0 when a
// column has none.
std::vector<double> column_medians(const Matrix& X, std::span<const int> rows);

CvReport cross_validate(const Dataset& data, ModelKind kind,
                        const CvParams& params,
                        std::vector<FoldDebug>* debug = nullptr);

struct EvalResult {
    CvParams params;
    std::vector<CvReport> reports;
    std::vector<ModalityImportance> importances;  // parallel to reports
};

void write_report_json(const EvalResult& result, const std::string& path);
void write_table1_csv(const EvalResult& result, const std::string& path);
void write_fig1_csv(const EvalResult& result, const std::string& path);

}  // namespace fatigue::eval
