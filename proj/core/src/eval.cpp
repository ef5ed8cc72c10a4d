#include "fatigue/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "fatigue/csv.hpp"
#include "fatigue/error.hpp"
#include "fatigue/rng.hpp"
#include "fatigue/stats.hpp"

namespace fatigue::eval {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

std::vector<std::vector<int>> kfold(int n, int k, std::uint64_t seed) {
    if (k < 2) throw Error("kfold needs k >= 2");
    if (n < k) throw Error("kfold needs n >= k");
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);
    std::vector<std::vector<int>> folds(static_cast<std::size_t>(k));
    for (int p = 0; p < n; ++p)
        folds[static_cast<std::size_t>(p % k)].push_back(order[static_cast<std::size_t>(p)]);
    return folds;
}

MetricSet metrics(std::span<const double> y, std::span<const double> yhat) {
    if (y.empty()) throw Error("metrics: empty input");
    if (y.size() != yhat.size()) throw Error("metrics: length mismatch");
    MetricSet m;
    m.n = static_cast<int>(y.size());
    double se = 0.0, ae = 0.0, pe = 0.0;
    int pe_n = 0;
    for (std::size_t j = 0; j < y.size(); ++j) {
        double d = y[j] - yhat[j];
        se += d * d;
        ae += std::abs(d);
        if (y[j] != 0.0) {
            pe += std::abs(d) / std::abs(y[j]);
            ++pe_n;
        } else {
            ++m.mape_excluded;
        }
    }
    m.rmse = std::sqrt(se / static_cast<double>(m.n));
    m.mae = ae / static_cast<double>(m.n);
    m.mape = pe_n > 0 ? pe / pe_n : kNaN;
    return m;
}

double pearson(std::span<const double> y, std::span<const double> yhat) {
    if (y.size() != yhat.size()) throw Error("pearson: length mismatch");
    if (y.size() < 2) return kNaN;
    double my = stats::mean(y), mh = stats::mean(yhat);
    double syy = 0.0, shh = 0.0, syh = 0.0;
    for (std::size_t j = 0; j < y.size(); ++j) {
        double a = y[j] - my, b = yhat[j] - mh;
        syy += a * a;
        shh += b * b;
        syh += a * b;
    }
    if (syy <= 0.0 || shh <= 0.0) return kNaN;
    return syh / std::sqrt(syy * shh);
}

namespace {

// Dense Cholesky solve of (A + lambda I) w = rhs with A symmetric PSD,
// stored row-major. Throws on a nonpositive pivot.
std::vector<double> cholesky_solve(std::vector<double> a, std::size_t p,
                                   std::vector<double> rhs) {
    for (std::size_t j = 0; j < p; ++j) {
        double d = a[j * p + j];
        for (std::size_t t = 0; t < j; ++t) d -= a[j * p + t] * a[j * p + t];
        if (!(d > 0.0))
            throw Error("linear baseline: singular system; use ridge lambda > 0");
        double root = std::sqrt(d);
        a[j * p + j] = root;
        for (std::size_t i = j + 1; i < p; ++i) {
            double v = a[i * p + j];
            for (std::size_t t = 0; t < j; ++t) v -= a[i * p + t] * a[j * p + t];
            a[i * p + j] = v / root;
        }
    }
    // L z = rhs, then L' w = z.
    for (std::size_t i = 0; i < p; ++i) {
        double v = rhs[i];
        for (std::size_t t = 0; t < i; ++t) v -= a[i * p + t] * rhs[t];
        rhs[i] = v / a[i * p + i];
    }
    for (std::size_t ii = p; ii-- > 0;) {
        double v = rhs[ii];
        for (std::size_t t = ii + 1; t < p; ++t) v -= a[t * p + ii] * rhs[t];
        rhs[ii] = v / a[ii * p + ii];
    }
    return rhs;
}

}  // namespace

LinearModel fit_linear_baseline(const Matrix& X, std::span<const double> y,
                                double lambda) {
    const std::size_t n = X.rows(), p = X.cols();
    if (y.size() != n) throw Error("linear baseline: X and y disagree");
    if (n < 2 || p == 0) throw Error("linear baseline needs n >= 2 and p >= 1");
    if (lambda < 0.0) throw Error("linear baseline: lambda must be >= 0");

    std::vector<double> col_mean(p, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        const double* row = X.row(r);
        for (std::size_t j = 0; j < p; ++j) {
            if (!std::isfinite(row[j]))
                throw Error("linear baseline: non-finite feature value");
            col_mean[j] += row[j];
        }
    }
    for (double& m : col_mean) m /= static_cast<double>(n);
    double y_mean = stats::mean(y);
    for (double v : y)
        if (!std::isfinite(v)) throw Error("linear baseline: non-finite target");

    std::vector<double> gram(p * p, 0.0), rhs(p, 0.0), centered(p);
    for (std::size_t r = 0; r < n; ++r) {
        const double* row = X.row(r);
        for (std::size_t j = 0; j < p; ++j) centered[j] = row[j] - col_mean[j];
        double yc = y[r] - y_mean;
        for (std::size_t j = 0; j < p; ++j) {
            double xj = centered[j];
            rhs[j] += xj * yc;
            double* grow = gram.data() + j * p;
            for (std::size_t l = j; l < p; ++l) grow[l] += xj * centered[l];
        }
    }
    for (std::size_t j = 0; j < p; ++j) {
        gram[j * p + j] += lambda;
        for (std::size_t l = j + 1; l < p; ++l) gram[l * p + j] = gram[j * p + l];
    }

    LinearModel model;
    model.weights = cholesky_solve(std::move(gram), p, std::move(rhs));
    model.intercept = y_mean;
    for (std::size_t j = 0; j < p; ++j)
        model.intercept -= model.weights[j] * col_mean[j];
    return model;
}

double predict_linear(const LinearModel& model, std::span<const double> x) {
    if (x.size() != model.weights.size())
        throw Error("linear baseline: feature dimension mismatch");
    double v = model.intercept;
    for (std::size_t j = 0; j < x.size(); ++j) v += model.weights[j] * x[j];
    return v;
}

ModalityImportance modality_importance(std::span<const double> importance,
                                       const features::FeatureMeta& meta,
                                       int top_k) {
    const std::size_t p = importance.size();
    if (p != meta.size()) throw Error("modality_importance: meta size mismatch");
    if (top_k < 1 || static_cast<std::size_t>(top_k) > p)
        throw Error("modality_importance: top_k out of range");

    std::vector<std::size_t> order(p);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (importance[a] != importance[b]) return importance[a] > importance[b];
        return a < b;
    });

    ModalityImportance out;
    out.top_k = top_k;
    out.top_dims.assign(order.begin(), order.begin() + top_k);
    for (std::size_t d : out.top_dims) {
        std::size_t m = index_of(meta.dim_modality(d));
        ++out.counts[m];
        out.score_sum[m] += importance[d];
    }
    return out;
}

namespace {

const std::string kLabels[] = {"linear",   "rf",           "merf_age",
                               "merf_bmi", "merf_age_bmi", "merf_provided"};
const std::string kDisplayNames[] = {"Linear Regression", "Random Forest",
                                     "MERF Age",          "MERF BMI",
                                     "MERF Age&BMI",      "MERF Provided"};

}  // namespace

const std::string& model_label(ModelKind kind) {
    return kLabels[static_cast<int>(kind)];
}

const std::string& model_display_name(ModelKind kind) {
    return kDisplayNames[static_cast<int>(kind)];
}

ModelKind model_kind_from_label(const std::string& label) {
    for (int i = 0; i < 6; ++i)
        if (kLabels[i] == label) return static_cast<ModelKind>(i);
    throw Error("unknown model '" + label +
                "' (want linear, rf, merf_age, merf_bmi, merf_age_bmi or "
                "merf_provided)");
}

std::vector<double> column_medians(const Matrix& X, std::span<const int> rows) {
    std::vector<double> medians(X.cols(), 0.0);
    std::vector<double> column;
    column.reserve(rows.size());
    for (std::size_t j = 0; j < X.cols(); ++j) {
        column.clear();
        for (int r : rows) {
            double v = X.at(static_cast<std::size_t>(r), j);
            if (std::isfinite(v)) column.push_back(v);
        }
        if (!column.empty()) medians[j] = stats::percentile(column, 50.0);
    }
    return medians;
}

namespace {

Matrix impute(const Matrix& X, std::span<const int> rows,
              std::span<const double> medians) {
    Matrix out(rows.size(), X.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double* src = X.row(static_cast<std::size_t>(rows[i]));
        double* dst = out.row(i);
        for (std::size_t j = 0; j < X.cols(); ++j)
            dst[j] = std::isfinite(src[j]) ? src[j] : medians[j];
    }
    return out;
}

std::optional<merf::ClusterMode> demographic_mode(ModelKind kind) {
    switch (kind) {
        case ModelKind::MerfAge: return merf::ClusterMode::Age;
        case ModelKind::MerfBmi: return merf::ClusterMode::Bmi;
        case ModelKind::MerfAgeBmi: return merf::ClusterMode::AgeAndBmi;
        default: return std::nullopt;
    }
}

struct MeanStd {
    double mean = kNaN;
    double std = kNaN;
};

MeanStd mean_std(std::span<const double> xs) {
    if (xs.empty()) return {};
    return {stats::mean(xs), stats::sample_std(xs)};
}

}  // namespace

CvReport cross_validate(const Dataset& data, ModelKind kind,
                        const CvParams& params,
                        std::vector<FoldDebug>* debug) {
    const std::size_t n = data.X.rows();
    if (data.y.size() != n || data.subject_id.size() != n)
        throw Error("cross_validate: dataset rows disagree");
    if (n == 0) throw Error("cross_validate: empty dataset");
    const auto mode = demographic_mode(kind);
    std::map<std::string, const ingest::SubjectRecord*> demo;
    if (mode) {
        for (const auto& s : data.subjects) demo[s.subject_id] = &s;
        for (const auto& id : data.subject_id)
            if (!demo.count(id))
                throw Error("cross_validate: no demographics for subject '" + id + "'");
    }
    if (kind == ModelKind::MerfProvided && data.provided_clusters.size() != n)
        throw Error("cross_validate: merf_provided needs one cluster per row");

    // Fold membership per row.
    std::vector<int> row_fold(n, -1);
    if (params.split == SplitMode::Record) {
        auto folds = kfold(static_cast<int>(n), params.k, params.seed);
        for (int f = 0; f < params.k; ++f)
            for (int r : folds[static_cast<std::size_t>(f)])
                row_fold[static_cast<std::size_t>(r)] = f;
    } else {
        std::vector<std::string> ids(data.subject_id.begin(), data.subject_id.end());
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        auto folds = kfold(static_cast<int>(ids.size()), params.k, params.seed);
        std::map<std::string, int> subject_fold;
        for (int f = 0; f < params.k; ++f)
            for (int s : folds[static_cast<std::size_t>(f)])
                subject_fold[ids[static_cast<std::size_t>(s)]] = f;
        for (std::size_t r = 0; r < n; ++r)
            row_fold[r] = subject_fold.at(data.subject_id[r]);
    }

    CvReport report;
    report.label = model_label(kind);
    report.oof_pred.assign(n, kNaN);
    std::vector<double> importance_sum;
    int importance_folds = 0;

    for (int f = 0; f < params.k; ++f) {
        std::vector<int> train_rows, test_rows;
        for (std::size_t r = 0; r < n; ++r)
            (row_fold[r] == f ? test_rows : train_rows).push_back(static_cast<int>(r));
        if (test_rows.empty() || train_rows.size() < 2)
            throw Error("cross_validate: fold too small");

        auto medians = column_medians(data.X, train_rows);
        Matrix Xtr = impute(data.X, train_rows, medians);
        Matrix Xte = impute(data.X, test_rows, medians);
        std::vector<double> ytr(train_rows.size()), yte(test_rows.size());
        for (std::size_t i = 0; i < train_rows.size(); ++i)
            ytr[i] = data.y[static_cast<std::size_t>(train_rows[i])];
        for (std::size_t i = 0; i < test_rows.size(); ++i)
            yte[i] = data.y[static_cast<std::size_t>(test_rows[i])];

        std::uint64_t fold_seed = hash_combine(params.seed, static_cast<std::uint64_t>(f));
        std::vector<double> pred(test_rows.size(), 0.0);
        std::optional<merf::ClusterScheme> scheme;

        if (kind == ModelKind::Linear) {
            LinearModel lm = fit_linear_baseline(Xtr, ytr, params.ridge_lambda);
            for (std::size_t i = 0; i < test_rows.size(); ++i)
                pred[i] = predict_linear(lm, {Xte.row(i), Xte.cols()});
        } else if (kind == ModelKind::RandomForest) {
            forest::ForestParams fp = params.forest;
            fp.seed = fold_seed;
            forest::Forest model = forest::fit_forest(Xtr, ytr, fp);
            pred = model.predict_rows(Xte);
            auto imp = model.importance();
            if (importance_sum.empty()) importance_sum.assign(imp.size(), 0.0);
            for (std::size_t j = 0; j < imp.size(); ++j) importance_sum[j] += imp[j];
            ++importance_folds;
        } else {
            std::vector<int> ctr(train_rows.size()), cte(test_rows.size());
            if (mode) {
                // Bin edges come from the training fold's subjects only.
                std::set<std::string> train_ids;
                for (int r : train_rows)
                    train_ids.insert(data.subject_id[static_cast<std::size_t>(r)]);
                std::vector<ingest::SubjectRecord> train_subjects;
                for (const auto& id : train_ids) train_subjects.push_back(*demo.at(id));
                scheme = merf::ClusterScheme::fit(*mode, train_subjects, params.cluster_bins);
                auto cluster_of_row = [&](int r) {
                    const auto* s = demo.at(data.subject_id[static_cast<std::size_t>(r)]);
                    return scheme->cluster_of(s->age, s->bmi);
                };
                for (std::size_t i = 0; i < train_rows.size(); ++i)
                    ctr[i] = cluster_of_row(train_rows[i]);
                for (std::size_t i = 0; i < test_rows.size(); ++i)
                    cte[i] = cluster_of_row(test_rows[i]);
            } else {
                for (std::size_t i = 0; i < train_rows.size(); ++i)
                    ctr[i] = data.provided_clusters[static_cast<std::size_t>(train_rows[i])];
                for (std::size_t i = 0; i < test_rows.size(); ++i)
                    cte[i] = data.provided_clusters[static_cast<std::size_t>(test_rows[i])];
            }
            merf::MerfParams mp;
            mp.forest = params.forest;
            mp.forest.seed = fold_seed;
            mp.max_em_iters = params.em_iters;
            mp.gll_rel_tol = params.gll_rel_tol;
            merf::MerfModel model = merf::fit_merf(Xtr, ytr, ctr, mp);
            for (std::size_t i = 0; i < test_rows.size(); ++i)
                pred[i] = merf::predict(model, {Xte.row(i), Xte.cols()}, cte[i]);
            auto imp = model.fixed_effect.importance();
            if (importance_sum.empty()) importance_sum.assign(imp.size(), 0.0);
            for (std::size_t j = 0; j < imp.size(); ++j) importance_sum[j] += imp[j];
            ++importance_folds;
            report.sigma2_per_fold.push_back(model.sigma2);
            report.sigma_b2_per_fold.push_back(model.sigma_b2);
        }

        for (std::size_t i = 0; i < test_rows.size(); ++i)
            report.oof_pred[static_cast<std::size_t>(test_rows[i])] = pred[i];
        report.folds.push_back(metrics(yte, pred));
        if (debug)
            debug->push_back({std::move(train_rows), std::move(test_rows),
                              std::move(medians), std::move(scheme)});
    }

    std::vector<double> rmses, maes, mapes;
    for (const auto& m : report.folds) {
        rmses.push_back(m.rmse);
        maes.push_back(m.mae);
        if (std::isfinite(m.mape)) mapes.push_back(m.mape);
    }
    auto [rm, rs] = mean_std(rmses);
    report.rmse_mean = rm;
    report.rmse_std = rs;
    auto [mm, ms] = mean_std(maes);
    report.mae_mean = mm;
    report.mae_std = ms;
    auto [pm, ps] = mean_std(mapes);
    report.mape_mean = pm;
    report.mape_std = ps;
    report.pooled_pearson = pearson(data.y, report.oof_pred);
    if (importance_folds > 0) {
        report.importance = std::move(importance_sum);
        for (double& v : report.importance) v /= importance_folds;
    }
    return report;
}

namespace {

nlohmann::json metric_pair(double mean, double std) {
    nlohmann::json j;
    j["mean"] = mean;
    j["std"] = std;
    return j;
}

nlohmann::json study_reference() {
    auto row = [](const char* model, const char* rmse, const char* mae,
                  const char* mape, const char* corr) {
        return nlohmann::json{{"model", model},
                              {"rmse", rmse},
                              {"mae", mae},
                              {"mape", mape},
                              {"corr", corr}};
    };
    return nlohmann::json{
        {"note",
         "Metrics reported for the original study cohort of 21 hospitalized "
         "patients. That dataset is private, so these values are shipped for "
         "context only and are never asserted by this software."},
        {"table1",
         nlohmann::json::array(
             {row("Linear Regression", "2.66±0.39", "2.08±0.27", "0.59±0.11", "0.41"),
              row("Random Forest", "1.98±0.08", "1.56±0.07", "0.47±0.05", "0.71"),
              row("MERF Age", "1.82±0.10", "1.38±0.08", "0.38±0.04", "0.74"),
              row("MERF BMI", "1.88±0.11", "1.47±0.07", "0.42±0.06", "0.73"),
              row("MERF Age&BMI", "1.78±0.13", "1.35±0.09", "0.36±0.07", "0.75")})}};
}

std::string fixed3(double v) {
    if (!std::isfinite(v)) return "nan";
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

}  // namespace

void write_report_json(const EvalResult& result, const std::string& path) {
    nlohmann::json models = nlohmann::json::array();
    for (std::size_t i = 0; i < result.reports.size(); ++i) {
        const CvReport& r = result.reports[i];
        nlohmann::json folds = nlohmann::json::array();
        for (const auto& m : r.folds)
            folds.push_back({{"rmse", m.rmse},
                             {"mae", m.mae},
                             {"mape", m.mape},
                             {"n", m.n},
                             {"mape_excluded", m.mape_excluded}});
        nlohmann::json entry = {
            {"label", r.label},
            {"display", model_display_name(model_kind_from_label(r.label))},
            {"rmse", metric_pair(r.rmse_mean, r.rmse_std)},
            {"mae", metric_pair(r.mae_mean, r.mae_std)},
            {"mape", metric_pair(r.mape_mean, r.mape_std)},
            {"pearson", r.pooled_pearson},
            {"folds", std::move(folds)},
            {"sigma2_per_fold", r.sigma2_per_fold},
            {"sigma_b2_per_fold", r.sigma_b2_per_fold}};
        if (i < result.importances.size() && !r.importance.empty()) {
            const ModalityImportance& mi = result.importances[i];
            nlohmann::json per_modality = nlohmann::json::array();
            for (Modality m : kAllModalities)
                per_modality.push_back(
                    {{"modality", modality_tag(m)},
                     {"count", mi.counts[index_of(m)]},
                     {"score_sum", mi.score_sum[index_of(m)]}});
            entry["modality_importance"] = {{"top_k", mi.top_k},
                                            {"modalities", std::move(per_modality)}};
        } else {
            entry["modality_importance"] = nullptr;
        }
        models.push_back(std::move(entry));
    }

    nlohmann::json doc = {
        {"format_version", 1},
        {"kind", "eval_report"},
        {"params",
         {{"k", result.params.k},
          {"seed", result.params.seed},
          {"split", result.params.split == SplitMode::Record ? "record" : "subject"},
          {"n_trees", result.params.forest.n_trees},
          {"mtry", result.params.forest.mtry},
          {"min_samples_leaf", result.params.forest.min_samples_leaf},
          {"max_depth", result.params.forest.max_depth},
          {"bootstrap", result.params.forest.bootstrap},
          {"em_iters", result.params.em_iters},
          {"gll_rel_tol", result.params.gll_rel_tol},
          {"ridge_lambda", result.params.ridge_lambda},
          {"cluster_bins", result.params.cluster_bins}}},
        {"models", std::move(models)},
        {"study_reference", study_reference()}};

    csv::Writer out(path);
    out.write(doc.dump(2));
    out.write("\n");
    out.close();
}

void write_table1_csv(const EvalResult& result, const std::string& path) {
    csv::Writer out(path);
    out.write("model,rmse,mae,mape,corr\n");
    for (const CvReport& r : result.reports) {
        out.write(model_display_name(model_kind_from_label(r.label)));
        out.write(",");
        out.write(fixed3(r.rmse_mean) + "±" + fixed3(r.rmse_std));
        out.write(",");
        out.write(fixed3(r.mae_mean) + "±" + fixed3(r.mae_std));
        out.write(",");
        if (std::isfinite(r.mape_mean))
            out.write(fixed3(r.mape_mean) + "±" + fixed3(r.mape_std));
        else
            out.write("nan");
        out.write(",");
        out.write(fixed3(r.pooled_pearson));
        out.write("\n");
    }
    out.close();
}

void write_fig1_csv(const EvalResult& result, const std::string& path) {
    csv::Writer out(path);
    out.write("model,modality,top15_count,score_sum\n");
    for (std::size_t i = 0; i < result.reports.size(); ++i) {
        const CvReport& r = result.reports[i];
        if (r.importance.empty() || i >= result.importances.size()) continue;
        const ModalityImportance& mi = result.importances[i];
        for (Modality m : kAllModalities) {
            out.write(r.label);
            out.write(",");
            out.write(modality_tag(m));
            out.write(",");
            out.write_int(mi.counts[index_of(m)]);
            out.write(",");
            out.write_double(mi.score_sum[index_of(m)]);
            out.write("\n");
        }
    }
    out.close();
}

}  // namespace fatigue::eval
