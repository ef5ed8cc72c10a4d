// Pipeline front end: synthetic data generation, feature extraction,
// model fitting/prediction and the cross-validated evaluation report.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fatigue/config.hpp"
#include "fatigue/csv.hpp"
#include "fatigue/error.hpp"
#include "fatigue/eval.hpp"
#include "fatigue/features.hpp"
#include "fatigue/forest.hpp"
#include "fatigue/ingest.hpp"
#include "fatigue/merf.hpp"
#include "fatigue/synth.hpp"

namespace {

using namespace fatigue;

// Removes every registered path unless commit() ran, so failed commands
// never leave partial outputs behind.
class OutputGuard {
public:
    ~OutputGuard() {
        for (const auto& p : paths_) std::remove(p.c_str());
    }
    std::string add(std::string path) {
        paths_.push_back(path);
        return path;
    }
    void commit() { paths_.clear(); }

private:
    std::vector<std::string> paths_;
};

struct GlobalOpts {
    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir;
    int threads = 1;
    bool seed_set = false;
    bool out_dir_set = false;
    bool threads_set = false;

    config::PipelineConfig resolve() const {
        config::PipelineConfig cfg;
        if (!config_path.empty()) cfg = config::PipelineConfig::load(config_path);
        if (seed_set) cfg.seed = seed;
        if (out_dir_set) cfg.out_dir = out_dir;
        if (threads_set) cfg.threads = threads;
        return cfg;
    }
};

std::string join(const std::string& dir, const std::string& name) {
    if (dir.empty() || dir == ".") return name;
    return dir + "/" + name;
}

void ensure_out_dir(const std::string& dir) {
    if (!dir.empty() && dir != ".") std::filesystem::create_directories(dir);
}

void write_json_file(const nlohmann::json& doc, const std::string& path,
                     int indent) {
    csv::Writer out(path);
    out.write(doc.dump(indent));
    out.write("\n");
    out.close();
}

std::string read_text_file(const std::string& path) {
    csv::LineReader reader(path);
    std::string text;
    while (auto line = reader.next()) {
        text.append(*line);
        text.push_back('\n');
    }
    return text;
}

// --- extract ---------------------------------------------------------

int run_extract(const GlobalOpts& global) {
    config::PipelineConfig cfg = global.resolve();
    ensure_out_dir(cfg.out_dir);

    auto subjects = ingest::parse_subjects(cfg.paths.subjects);
    ingest::StreamTable rr = ingest::parse_stream(cfg.paths.rr, Modality::RR);
    ingest::StreamTable accel = ingest::parse_stream(cfg.paths.accel, Modality::ACCEL);
    ingest::StreamTable temp = ingest::parse_stream(cfg.paths.temp, Modality::TEMP);
    ingest::StreamTable resp = ingest::parse_stream(cfg.paths.resp, Modality::RESP);
    auto labels = ingest::parse_labels(cfg.paths.labels);

    std::set<std::string> labeled;
    for (const auto& l : labels) labeled.insert(l.subject_id);
    std::vector<std::string> unlabeled;
    for (const auto& s : subjects)
        if (!labeled.count(s.subject_id)) {
            unlabeled.push_back(s.subject_id);
            std::cerr << "warning: subject " << s.subject_id
                      << " has no labels and contributes no rows\n";
        }

    auto segments = ingest::build_segments({&rr, &accel, &temp, &resp}, labels,
                                           cfg.tz_offset_minutes);

    features::FeatureConfig fc{cfg.rates, cfg.policy};
    std::vector<features::DataPoint> points;
    std::map<std::string, int> rejects_by_reason;
    std::map<int, int> all_valid_histogram;  // windows_all_valid -> segments
    std::array<long long, kModalityCount> valid_window_sum{};
    for (const auto& segment : segments) {
        auto result = features::segment_features(segment, fc);
        all_valid_histogram[result.windows_all_valid] += 1;
        for (std::size_t m = 0; m < kModalityCount; ++m)
            valid_window_sum[m] += result.valid_windows[m];
        if (result.point)
            points.push_back(std::move(*result.point));
        else
            rejects_by_reason[result.reject_reason] += 1;
    }

    OutputGuard guard;
    std::string features_path = guard.add(join(cfg.out_dir, "features.csv"));
    std::string meta_path = guard.add(join(cfg.out_dir, "feature_meta.json"));
    std::string log_path = guard.add(join(cfg.out_dir, "extraction_log.json"));

    features::write_features_csv(features_path, points);
    features::write_feature_meta_json(meta_path);

    auto stream_stats = [](const ingest::StreamTable& table) {
        return nlohmann::json{
            {"rows", table.stats.rows},
            {"bad_rows", table.stats.bad_rows},
            {"dropped_out_of_range", table.stats.dropped_out_of_range},
            {"dropped_non_monotonic", table.stats.dropped_non_monotonic},
            {"subjects", table.by_subject.size()}};
    };
    nlohmann::json histogram = nlohmann::json::object();
    for (const auto& [valid, count] : all_valid_histogram)
        histogram[std::to_string(valid)] = count;
    nlohmann::json mean_valid = nlohmann::json::object();
    for (Modality m : kAllModalities)
        mean_valid[modality_name(m)] =
            segments.empty() ? 0.0
                             : static_cast<double>(valid_window_sum[index_of(m)]) /
                                   static_cast<double>(segments.size());
    nlohmann::json rejects = nlohmann::json::object();
    for (const auto& [reason, count] : rejects_by_reason) rejects[reason] = count;

    nlohmann::json log = {
        {"format_version", 1},
        {"kind", "extraction_log"},
        {"streams",
         {{"rr", stream_stats(rr)},
          {"accel", stream_stats(accel)},
          {"temp", stream_stats(temp)},
          {"resp", stream_stats(resp)}}},
        {"labels", labels.size()},
        {"segments", segments.size()},
        {"accepted", points.size()},
        {"rejected", segments.size() - points.size()},
        {"rejects_by_reason", std::move(rejects)},
        {"windows_all_valid_histogram", std::move(histogram)},
        {"mean_valid_windows", std::move(mean_valid)},
        {"subjects_without_labels", unlabeled}};
    write_json_file(log, log_path, 2);

    guard.commit();
    std::cout << "extract: " << points.size() << " data points ("
              << segments.size() - points.size() << " rejected) -> "
              << features_path << "\n";
    return 0;
}

// --- dataset assembly ------------------------------------------------

eval::Dataset load_dataset(const std::string& features_path,
                           const std::string& subjects_path) {
    eval::Dataset data;
    auto points = features::read_features_csv(features_path);
    if (points.empty()) throw Error("no data points in " + features_path);
    data.X = Matrix(points.size(), features::kFeatureVectorSize);
    for (std::size_t r = 0; r < points.size(); ++r) {
        data.subject_id.push_back(points[r].subject_id);
        data.segment_start_ms.push_back(points[r].segment_start_ms);
        data.y.push_back(points[r].score);
        std::copy(points[r].values.begin(), points[r].values.end(), data.X.row(r));
    }
    if (!subjects_path.empty())
        data.subjects = ingest::parse_subjects(subjects_path);
    return data;
}

// --- evaluate --------------------------------------------------------

int run_evaluate(const GlobalOpts& global, const std::string& features_flag,
                 const std::string& subjects_flag,
                 const std::vector<std::string>& model_flags) {
    config::PipelineConfig cfg = global.resolve();
    ensure_out_dir(cfg.out_dir);

    std::string features_path =
        features_flag.empty() ? cfg.paths.features : features_flag;
    std::string subjects_path =
        subjects_flag.empty() ? cfg.paths.subjects : subjects_flag;
    std::vector<std::string> model_labels =
        model_flags.empty() ? cfg.models : model_flags;
    if (model_labels.empty()) throw Error("no models requested");

    std::vector<eval::ModelKind> kinds;
    bool needs_subjects = false;
    for (const auto& label : model_labels) {
        eval::ModelKind kind = eval::model_kind_from_label(label);
        if (kind == eval::ModelKind::MerfProvided)
            throw Error("merf_provided is only available through the library "
                        "API; the features file carries no cluster column");
        if (kind != eval::ModelKind::Linear && kind != eval::ModelKind::RandomForest)
            needs_subjects = true;
        kinds.push_back(kind);
    }

    eval::Dataset data =
        load_dataset(features_path, needs_subjects ? subjects_path : "");

    eval::CvParams params;
    params.k = cfg.cv_k;
    params.seed = cfg.seed;
    params.split = cfg.cv_split == "subject" ? eval::SplitMode::Subject
                                             : eval::SplitMode::Record;
    params.forest = cfg.forest;
    params.forest.n_threads = cfg.threads;
    params.em_iters = cfg.em_iters;
    params.gll_rel_tol = cfg.gll_rel_tol;
    params.ridge_lambda = cfg.ridge_lambda;
    params.cluster_bins = cfg.cluster_bins;

    eval::EvalResult result;
    result.params = params;
    for (eval::ModelKind kind : kinds) {
        std::cout << "evaluate: " << eval::model_label(kind) << " (" << params.k
                  << "-fold)\n";
        eval::CvReport report = eval::cross_validate(data, kind, params);
        eval::ModalityImportance mi;
        if (!report.importance.empty())
            mi = eval::modality_importance(report.importance,
                                           features::FeatureMeta::standard());
        result.importances.push_back(mi);
        result.reports.push_back(std::move(report));
    }

    OutputGuard guard;
    std::string report_path = guard.add(join(cfg.out_dir, "report.json"));
    std::string table_path = guard.add(join(cfg.out_dir, "table1.csv"));
    std::string fig_path = guard.add(join(cfg.out_dir, "fig1.csv"));
    eval::write_report_json(result, report_path);
    eval::write_table1_csv(result, table_path);
    eval::write_fig1_csv(result, fig_path);
    guard.commit();
    std::cout << "evaluate: wrote " << report_path << ", " << table_path << ", "
              << fig_path << "\n";
    return 0;
}

// --- synth -----------------------------------------------------------

int run_synth_streams(const GlobalOpts& global, int subjects, int days,
                      double missingness) {
    config::PipelineConfig cfg = global.resolve();
    ensure_out_dir(cfg.out_dir);

    synth::StreamsSpec spec;
    spec.n_subjects = subjects;
    spec.days = days;
    spec.seed = cfg.seed;
    spec.missingness = missingness;

    OutputGuard guard;
    for (const char* name : {"subjects.csv", "rr.csv", "accel.csv", "temp.csv",
                             "resp.csv", "labels.csv"})
        guard.add(join(cfg.out_dir, name));
    std::string config_path = guard.add(join(cfg.out_dir, "config.toml"));

    synth::StreamsSummary summary = synth::gen_streams(spec, cfg.out_dir);

    // Record the bundle's actual rates so a later `extract --config` uses
    // matching coverage denominators.
    config::PipelineConfig bundle = cfg;
    bundle.paths.subjects = join(cfg.out_dir, "subjects.csv");
    bundle.paths.rr = join(cfg.out_dir, "rr.csv");
    bundle.paths.accel = join(cfg.out_dir, "accel.csv");
    bundle.paths.temp = join(cfg.out_dir, "temp.csv");
    bundle.paths.resp = join(cfg.out_dir, "resp.csv");
    bundle.paths.labels = join(cfg.out_dir, "labels.csv");
    bundle.paths.features = join(cfg.out_dir, "features.csv");
    bundle.rates.rr_per_s = summary.rr_per_s;
    bundle.rates.accel_hz = spec.accel_hz;
    bundle.rates.temp_hz = spec.temp_hz;
    bundle.rates.resp_hz = spec.resp_hz;
    config::write_toml(bundle, config_path);

    guard.commit();
    std::cout << "synth streams: " << summary.n_labels << " labels, rr rows "
              << summary.rows[index_of(Modality::RR)] << ", accel rows "
              << summary.rows[index_of(Modality::ACCEL)] << " -> " << cfg.out_dir
              << "\n";
    return 0;
}

int run_synth_clustered(const GlobalOpts& global, int clusters, int per_cluster,
                        double sigma_b, double sigma_e, const std::string& fixed) {
    config::PipelineConfig cfg = global.resolve();
    ensure_out_dir(cfg.out_dir);

    synth::SynthSpec spec;
    spec.n_clusters = clusters;
    spec.points_per_cluster = per_cluster;
    spec.sigma_b = sigma_b;
    spec.sigma_e = sigma_e;
    spec.seed = cfg.seed;
    if (fixed == "friedman1")
        spec.fixed = synth::FixedEffect::Friedman1;
    else if (fixed == "linear")
        spec.fixed = synth::FixedEffect::Linear;
    else
        throw Error("unknown fixed effect '" + fixed + "' (want friedman1 or linear)");

    OutputGuard guard;
    std::string features_path = guard.add(join(cfg.out_dir, "synth_features.csv"));
    std::string truth_path = guard.add(join(cfg.out_dir, "synth_truth.json"));
    synth::ClusteredData data = synth::gen_clustered(spec);
    synth::write_clustered(data, features_path, truth_path);
    guard.commit();
    std::cout << "synth clustered: " << data.y.size() << " points -> "
              << features_path << "\n";
    return 0;
}

// --- fit / predict ---------------------------------------------------

std::vector<double> all_row_medians(const Matrix& X) {
    std::vector<int> rows(X.rows());
    for (std::size_t r = 0; r < X.rows(); ++r) rows[r] = static_cast<int>(r);
    return eval::column_medians(X, rows);
}

Matrix impute_all(const Matrix& X, std::span<const double> medians) {
    Matrix out = X;
    for (std::size_t r = 0; r < out.rows(); ++r) {
        double* row = out.row(r);
        for (std::size_t j = 0; j < out.cols(); ++j)
            if (!std::isfinite(row[j])) row[j] = medians[j];
    }
    return out;
}

int run_fit(const GlobalOpts& global, const std::string& features_flag,
            const std::string& subjects_flag, const std::string& model_label) {
    config::PipelineConfig cfg = global.resolve();
    ensure_out_dir(cfg.out_dir);

    eval::ModelKind kind = eval::model_kind_from_label(model_label);
    if (kind == eval::ModelKind::MerfProvided)
        throw Error("merf_provided is only available through the library API");

    std::string features_path =
        features_flag.empty() ? cfg.paths.features : features_flag;
    bool needs_subjects =
        kind != eval::ModelKind::Linear && kind != eval::ModelKind::RandomForest;
    std::string subjects_path =
        subjects_flag.empty() ? cfg.paths.subjects : subjects_flag;
    eval::Dataset data =
        load_dataset(features_path, needs_subjects ? subjects_path : "");

    auto medians = all_row_medians(data.X);
    Matrix X = impute_all(data.X, medians);

    forest::ForestParams fp = cfg.forest;
    fp.seed = cfg.seed;
    fp.n_threads = cfg.threads;

    nlohmann::json doc = {{"format_version", 1},
                          {"kind", "model_bundle"},
                          {"model", model_label},
                          {"medians", medians}};

    if (kind == eval::ModelKind::Linear) {
        eval::LinearModel lm =
            eval::fit_linear_baseline(X, data.y, cfg.ridge_lambda);
        doc["linear"] = {{"weights", lm.weights}, {"intercept", lm.intercept}};
    } else if (kind == eval::ModelKind::RandomForest) {
        forest::Forest model = forest::fit_forest(X, data.y, fp);
        doc["forest"] = nlohmann::json::parse(forest::to_json(model));
    } else {
        merf::ClusterMode mode =
            kind == eval::ModelKind::MerfAge   ? merf::ClusterMode::Age
            : kind == eval::ModelKind::MerfBmi ? merf::ClusterMode::Bmi
                                               : merf::ClusterMode::AgeAndBmi;
        std::map<std::string, const ingest::SubjectRecord*> demo;
        for (const auto& s : data.subjects) demo[s.subject_id] = &s;
        std::set<std::string> seen;
        std::vector<ingest::SubjectRecord> present;
        for (const auto& id : data.subject_id) {
            if (!demo.count(id))
                throw Error("no demographics for subject '" + id + "'");
            if (seen.insert(id).second) present.push_back(*demo.at(id));
        }
        merf::ClusterScheme scheme =
            merf::ClusterScheme::fit(mode, present, cfg.cluster_bins);
        std::vector<int> clusters;
        for (const auto& id : data.subject_id) {
            const auto* s = demo.at(id);
            clusters.push_back(scheme.cluster_of(s->age, s->bmi));
        }
        merf::MerfParams mp;
        mp.forest = fp;
        mp.max_em_iters = cfg.em_iters;
        mp.gll_rel_tol = cfg.gll_rel_tol;
        merf::MerfModel model = merf::fit_merf(X, data.y, clusters, mp);
        model.scheme = scheme;
        doc["merf"] = nlohmann::json::parse(merf::to_json(model));
    }

    OutputGuard guard;
    std::string model_path = guard.add(join(cfg.out_dir, "model.json"));
    write_json_file(doc, model_path, 0);
    guard.commit();
    std::cout << "fit: " << model_label << " -> " << model_path << "\n";
    return 0;
}

int run_predict(const GlobalOpts& global, const std::string& model_path,
                const std::string& features_flag,
                const std::string& subjects_flag) {
    config::PipelineConfig cfg = global.resolve();
    ensure_out_dir(cfg.out_dir);

    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_text_file(model_path));
    } catch (const nlohmann::json::exception& e) {
        throw Error("model file is not valid JSON: " + std::string(e.what()));
    }
    if (doc.value("kind", "") != "model_bundle" ||
        doc.value("format_version", 0) != 1)
        throw Error("not a version-1 model bundle: " + model_path);
    std::string model_label = doc.at("model").get<std::string>();
    auto medians = doc.at("medians").get<std::vector<double>>();

    std::string features_path =
        features_flag.empty() ? cfg.paths.features : features_flag;
    auto points = features::read_features_csv(features_path);
    if (points.empty()) throw Error("no data points in " + features_path);

    std::vector<double> predictions(points.size(), 0.0);
    if (doc.contains("linear")) {
        eval::LinearModel lm;
        lm.weights = doc.at("linear").at("weights").get<std::vector<double>>();
        lm.intercept = doc.at("linear").at("intercept").get<double>();
        for (std::size_t r = 0; r < points.size(); ++r) {
            std::vector<double> x = points[r].values;
            for (std::size_t j = 0; j < x.size(); ++j)
                if (!std::isfinite(x[j])) x[j] = medians[j];
            predictions[r] = eval::predict_linear(lm, x);
        }
    } else if (doc.contains("forest")) {
        forest::Forest model = forest::forest_from_json(doc.at("forest").dump());
        for (std::size_t r = 0; r < points.size(); ++r) {
            std::vector<double> x = points[r].values;
            for (std::size_t j = 0; j < x.size(); ++j)
                if (!std::isfinite(x[j])) x[j] = medians[j];
            predictions[r] = model.predict(x);
        }
    } else if (doc.contains("merf")) {
        merf::MerfModel model = merf::merf_from_json(doc.at("merf").dump());
        if (!model.scheme)
            throw Error("merf model bundle lacks a cluster scheme");
        std::string subjects_path =
            subjects_flag.empty() ? cfg.paths.subjects : subjects_flag;
        auto subjects = ingest::parse_subjects(subjects_path);
        std::map<std::string, const ingest::SubjectRecord*> demo;
        for (const auto& s : subjects) demo[s.subject_id] = &s;
        for (std::size_t r = 0; r < points.size(); ++r) {
            std::vector<double> x = points[r].values;
            for (std::size_t j = 0; j < x.size(); ++j)
                if (!std::isfinite(x[j])) x[j] = medians[j];
            std::optional<int> cluster;
            auto it = demo.find(points[r].subject_id);
            if (it != demo.end())
                cluster = model.scheme->cluster_of(it->second->age, it->second->bmi);
            predictions[r] = merf::predict(model, x, cluster);
        }
    } else {
        throw Error("model bundle carries no recognizable model");
    }

    OutputGuard guard;
    std::string out_path = guard.add(join(cfg.out_dir, "predictions.csv"));
    csv::Writer out(out_path);
    out.write("subject_id,segment_start_ms,score,prediction\n");
    for (std::size_t r = 0; r < points.size(); ++r) {
        out.write(points[r].subject_id);
        out.write(",");
        out.write_int(points[r].segment_start_ms);
        out.write(",");
        out.write_int(points[r].score);
        out.write(",");
        out.write_double(predictions[r]);
        out.write("\n");
    }
    out.close();
    guard.commit();
    std::cout << "predict: " << model_label << " on " << points.size()
              << " points -> " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Wearable fatigue pipeline: extraction, models, reports"};
    app.require_subcommand(1);

    GlobalOpts global;
    auto* opt_config = app.add_option("--config", global.config_path,
                                      "TOML config file");
    auto* opt_seed = app.add_option("--seed", global.seed, "Master RNG seed");
    auto* opt_out = app.add_option("--out-dir", global.out_dir,
                                   "Output directory");
    auto* opt_threads = app.add_option("--threads", global.threads,
                                       "Worker threads for forest fitting");
    app.fallthrough();

    // extract
    auto* extract = app.add_subcommand("extract",
                                       "Raw CSV bundle -> features.csv");

    // evaluate
    std::string features_flag, subjects_flag;
    std::vector<std::string> model_flags;
    auto* evaluate = app.add_subcommand("evaluate",
                                        "Cross-validated model comparison");
    evaluate->add_option("--features", features_flag, "features.csv path");
    evaluate->add_option("--subjects", subjects_flag, "subjects.csv path");
    evaluate->add_option("--models", model_flags,
                         "Model labels (default from config)")
        ->delimiter(',');

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Synthetic data generators");
    synth_cmd->require_subcommand(1);
    int synth_subjects = 21, synth_days = 7;
    double synth_missingness = 0.0;
    auto* streams = synth_cmd->add_subcommand("streams",
                                              "Physiological CSV bundle");
    streams->add_option("--subjects", synth_subjects, "Subject count")
        ->check(CLI::PositiveNumber);
    streams->add_option("--days", synth_days, "Days per subject")
        ->check(CLI::PositiveNumber);
    streams->add_option("--missingness", synth_missingness,
                        "Fraction of each timeline lost to dropouts")
        ->check(CLI::Range(0.0, 0.999));

    int synth_clusters = 20, synth_per_cluster = 40;
    double synth_sigma_b = 2.0, synth_sigma_e = 1.0;
    std::string synth_fixed = "friedman1";
    auto* clustered = synth_cmd->add_subcommand("clustered",
                                                "Clustered regression benchmark");
    clustered->add_option("--clusters", synth_clusters, "Cluster count")
        ->required()
        ->check(CLI::PositiveNumber);
    clustered->add_option("--per-cluster", synth_per_cluster,
                          "Points per cluster")
        ->required()
        ->check(CLI::PositiveNumber);
    clustered->add_option("--sigma-b", synth_sigma_b, "Random-intercept std")
        ->check(CLI::NonNegativeNumber);
    clustered->add_option("--sigma-e", synth_sigma_e, "Noise std");
    clustered->add_option("--fixed", synth_fixed, "friedman1 or linear");

    // fit / predict
    std::string fit_model = "rf";
    auto* fit = app.add_subcommand("fit", "Train one model and serialize it");
    fit->add_option("--features", features_flag, "features.csv path");
    fit->add_option("--subjects", subjects_flag, "subjects.csv path");
    fit->add_option("--model", fit_model,
                    "linear, rf, merf_age, merf_bmi or merf_age_bmi");

    std::string predict_model_path;
    auto* predict = app.add_subcommand("predict",
                                       "Apply a serialized model to features");
    predict->add_option("--model", predict_model_path, "model.json path")
        ->required();
    predict->add_option("--features", features_flag, "features.csv path");
    predict->add_option("--subjects", subjects_flag,
                        "subjects.csv path (MERF cluster lookup)");

    CLI11_PARSE(app, argc, argv);
    global.seed_set = opt_seed->count() > 0;
    global.out_dir_set = opt_out->count() > 0;
    global.threads_set = opt_threads->count() > 0;
    (void)opt_config;

    try {
        if (extract->parsed()) return run_extract(global);
        if (evaluate->parsed())
            return run_evaluate(global, features_flag, subjects_flag, model_flags);
        if (synth_cmd->parsed()) {
            if (streams->parsed())
                return run_synth_streams(global, synth_subjects, synth_days,
                                         synth_missingness);
            if (clustered->parsed())
                return run_synth_clustered(global, synth_clusters,
                                           synth_per_cluster, synth_sigma_b,
                                           synth_sigma_e, synth_fixed);
        }
        if (fit->parsed())
            return run_fit(global, features_flag, subjects_flag, fit_model);
        if (predict->parsed())
            return run_predict(global, predict_model_path, features_flag,
                               subjects_flag);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cerr << "error: no command\n";
    return 1;
}
