#include "fatigue/merf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "fatigue/csv.hpp"
#include "fatigue/error.hpp"
#include "fatigue/stats.hpp"

namespace fatigue::merf {

namespace {

const std::string kModeNames[] = {"age", "bmi", "age_bmi"};

std::vector<double> quantile_edges(std::vector<double> values, int n_bins) {
    if (values.empty()) throw Error("cluster scheme needs at least one subject");
    std::sort(values.begin(), values.end());
    std::vector<double> edges;
    edges.reserve(static_cast<std::size_t>(n_bins) - 1);
    for (int k = 1; k < n_bins; ++k)
        edges.push_back(stats::percentile_sorted(values, 100.0 * k / n_bins));
    return edges;
}

int bin_of(double value, const std::vector<double>& edges) {
    int bin = 0;
    for (double edge : edges)
        if (edge <= value) ++bin;
    return bin;
}

// Sufficient statistics per cluster, keyed by cluster id.
struct ClusterSums {
    int n = 0;
    double sum = 0.0;
};

std::map<int, ClusterSums> accumulate(std::span<const double> residuals,
                                      std::span<const int> clusters) {
    std::map<int, ClusterSums> sums;
    for (std::size_t j = 0; j < residuals.size(); ++j) {
        auto& s = sums[clusters[j]];
        ++s.n;
        s.sum += residuals[j];
    }
    return sums;
}

}  // namespace

const std::string& cluster_mode_name(ClusterMode mode) {
    return kModeNames[static_cast<int>(mode)];
}

ClusterMode cluster_mode_from_name(const std::string& name) {
    for (int i = 0; i < 3; ++i)
        if (kModeNames[i] == name) return static_cast<ClusterMode>(i);
    throw Error("unknown cluster mode '" + name + "' (want age, bmi or age_bmi)");
}

ClusterScheme ClusterScheme::fit(ClusterMode mode,
                                 std::span<const ingest::SubjectRecord> subjects,
                                 int n_bins) {
    if (n_bins < 1) throw Error("cluster scheme needs n_bins >= 1");
    ClusterScheme scheme;
    scheme.mode = mode;
    scheme.n_bins = n_bins;
    std::vector<double> ages, bmis;
    ages.reserve(subjects.size());
    bmis.reserve(subjects.size());
    for (const auto& s : subjects) {
        ages.push_back(s.age);
        bmis.push_back(s.bmi);
    }
    if (mode != ClusterMode::Bmi) scheme.age_edges = quantile_edges(std::move(ages), n_bins);
    if (mode != ClusterMode::Age) scheme.bmi_edges = quantile_edges(std::move(bmis), n_bins);
    return scheme;
}

int ClusterScheme::cluster_of(double age, double bmi) const {
    switch (mode) {
        case ClusterMode::Age:
            return bin_of(age, age_edges);
        case ClusterMode::Bmi:
            return bin_of(bmi, bmi_edges);
        case ClusterMode::AgeAndBmi:
            return bin_of(age, age_edges) * n_bins + bin_of(bmi, bmi_edges);
    }
    throw Error("invalid cluster mode");
}

int ClusterScheme::n_clusters() const {
    return mode == ClusterMode::AgeAndBmi ? n_bins * n_bins : n_bins;
}

std::map<std::string, int> assign_clusters(
    std::span<const ingest::SubjectRecord> subjects,
    const ClusterScheme& scheme) {
    std::map<std::string, int> out;
    for (const auto& s : subjects)
        out[s.subject_id] = scheme.cluster_of(s.age, s.bmi);
    return out;
}

std::map<int, double> estep(std::span<const double> residuals,
                            std::span<const int> clusters, double sigma2,
                            double sigma_b2) {
    std::map<int, double> b;
    for (const auto& [id, s] : accumulate(residuals, clusters)) {
        double denom = s.n * sigma_b2 + sigma2;
        b[id] = denom > 0.0 ? sigma_b2 * s.sum / denom : 0.0;
    }
    return b;
}

std::pair<double, double> update_variance(std::span<const double> residuals,
                                          const std::map<int, double>& b,
                                          std::span<const int> clusters,
                                          double sigma2, double sigma_b2) {
    const std::size_t n_total = residuals.size();
    double sse = 0.0;
    for (std::size_t j = 0; j < n_total; ++j) {
        double eps = residuals[j] - b.at(clusters[j]);
        sse += eps * eps;
    }
    auto sums = accumulate(residuals, clusters);
    double trace_term = 0.0;
    double b2_term = 0.0;
    for (const auto& [id, s] : sums) {
        double denom = sigma2 + s.n * sigma_b2;
        if (denom > 0.0) {
            trace_term += sigma2 * s.n * sigma_b2 / denom;
            b2_term += sigma_b2 * sigma2 / denom;
        }
        double bi = b.at(id);
        b2_term += bi * bi;
    }
    double sigma2_new = (sse + trace_term) / static_cast<double>(n_total);
    sigma2_new = std::max(sigma2_new, 1e-8);
    double sigma_b2_new = b2_term / static_cast<double>(sums.size());
    return {sigma2_new, sigma_b2_new};
}

double gll(std::span<const double> residuals, const std::map<int, double>& b,
           std::span<const int> clusters, double sigma2, double sigma_b2) {
    double sse = 0.0;
    for (std::size_t j = 0; j < residuals.size(); ++j) {
        double eps = residuals[j] - b.at(clusters[j]);
        sse += eps * eps;
    }
    double value = sse / sigma2 +
                   static_cast<double>(residuals.size()) * std::log(sigma2);
    if (sigma_b2 > 0.0) {
        for (const auto& [id, bi] : b)
            value += bi * bi / sigma_b2 + std::log(sigma_b2);
    }
    return value;
}

MerfModel fit_merf(const Matrix& X, std::span<const double> y,
                   std::span<const int> clusters, const MerfParams& params) {
    const std::size_t n = X.rows();
    if (y.size() != n || clusters.size() != n)
        throw Error("merf: X, y and clusters disagree on sample count");
    if (n < 2) throw Error("merf needs at least two samples");
    if (params.max_em_iters < 1) throw Error("merf needs max_em_iters >= 1");

    MerfModel model;
    model.sigma2 = params.initial_sigma2;
    model.sigma_b2 = params.initial_sigma_b2;
    for (int id : clusters) model.intercepts[id] = 0.0;

    std::vector<double> ystar(n), residuals(n);
    double prev_gll = std::numeric_limits<double>::quiet_NaN();
    for (int iter = 0; iter < params.max_em_iters; ++iter) {
        for (std::size_t j = 0; j < n; ++j)
            ystar[j] = y[j] - model.intercepts.at(clusters[j]);
        model.fixed_effect = forest::fit_forest(X, ystar, params.forest);
        std::vector<double> fhat = model.fixed_effect.predict_rows(X);
        for (std::size_t j = 0; j < n; ++j) residuals[j] = y[j] - fhat[j];

        // Intercepts are still all zero here on the first pass, so this
        // is the criterion at the initial parameter values.
        if (iter == 0)
            model.initial_gll = gll(residuals, model.intercepts, clusters,
                                    model.sigma2, model.sigma_b2);

        auto b_new = estep(residuals, clusters, model.sigma2, model.sigma_b2);
        double max_delta_b = 0.0;
        for (const auto& [id, bi] : b_new)
            max_delta_b = std::max(max_delta_b,
                                   std::abs(bi - model.intercepts.at(id)));
        model.intercepts = std::move(b_new);
        std::tie(model.sigma2, model.sigma_b2) = update_variance(
            residuals, model.intercepts, clusters, model.sigma2, model.sigma_b2);
        double g = gll(residuals, model.intercepts, clusters, model.sigma2,
                       model.sigma_b2);
        model.trace.push_back({g, model.sigma2, model.sigma_b2, max_delta_b});

        if (iter > 0 &&
            std::abs(g - prev_gll) / (std::abs(prev_gll) + 1e-12) <
                params.gll_rel_tol)
            break;
        prev_gll = g;
    }
    // Align the stored intercepts with the final variance estimates.
    model.intercepts = estep(residuals, clusters, model.sigma2, model.sigma_b2);
    return model;
}

double predict(const MerfModel& model, std::span<const double> x,
               std::optional<int> cluster) {
    double value = model.fixed_effect.predict(x);
    if (cluster) {
        auto it = model.intercepts.find(*cluster);
        if (it != model.intercepts.end()) value += it->second;
    }
    return value;
}

namespace {

nlohmann::json scheme_to_json(const ClusterScheme& scheme) {
    return {{"mode", cluster_mode_name(scheme.mode)},
            {"n_bins", scheme.n_bins},
            {"age_edges", scheme.age_edges},
            {"bmi_edges", scheme.bmi_edges}};
}

ClusterScheme scheme_from_json(const nlohmann::json& doc) {
    ClusterScheme scheme;
    scheme.mode = cluster_mode_from_name(doc.at("mode").get<std::string>());
    scheme.n_bins = doc.at("n_bins").get<int>();
    scheme.age_edges = doc.at("age_edges").get<std::vector<double>>();
    scheme.bmi_edges = doc.at("bmi_edges").get<std::vector<double>>();
    return scheme;
}

}  // namespace

std::string to_json(const MerfModel& model) {
    nlohmann::json intercepts = nlohmann::json::array();
    for (const auto& [id, bi] : model.intercepts)
        intercepts.push_back({id, bi});
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& it : model.trace)
        trace.push_back({it.gll, it.sigma2, it.sigma_b2, it.max_delta_b});
    nlohmann::json doc = {
        {"format_version", 1},
        {"kind", "merf"},
        {"sigma2", model.sigma2},
        {"sigma_b2", model.sigma_b2},
        {"initial_gll", model.initial_gll},
        {"intercepts", std::move(intercepts)},
        {"scheme", model.scheme ? scheme_to_json(*model.scheme)
                                : nlohmann::json()},
        {"trace", std::move(trace)},
        {"forest", nlohmann::json::parse(forest::to_json(model.fixed_effect))}};
    return doc.dump();
}

MerfModel merf_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("merf document is not valid JSON: ") + e.what());
    }
    if (doc.value("kind", "") != "merf" || doc.value("format_version", 0) != 1)
        throw Error("not a version-1 merf document");

    MerfModel model;
    model.sigma2 = doc.at("sigma2").get<double>();
    model.sigma_b2 = doc.at("sigma_b2").get<double>();
    model.initial_gll = doc.at("initial_gll").get<double>();
    for (const auto& pair : doc.at("intercepts"))
        model.intercepts[pair.at(0).get<int>()] = pair.at(1).get<double>();
    if (!doc.at("scheme").is_null())
        model.scheme = scheme_from_json(doc.at("scheme"));
    for (const auto& it : doc.at("trace"))
        model.trace.push_back({it.at(0).get<double>(), it.at(1).get<double>(),
                               it.at(2).get<double>(), it.at(3).get<double>()});
    model.fixed_effect = forest::forest_from_json(doc.at("forest").dump());
    return model;
}

void save_merf(const MerfModel& model, const std::string& path) {
    csv::Writer out(path);
    out.write(to_json(model));
    out.write("\n");
    out.close();
}

MerfModel load_merf(const std::string& path) {
    csv::LineReader reader(path);
    std::string text;
    while (auto line = reader.next()) text.append(*line);
    return merf_from_json(text);
}

}  // namespace fatigue::merf
