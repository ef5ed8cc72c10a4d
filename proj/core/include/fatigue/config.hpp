#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fatigue/forest.hpp"
#include "fatigue/ingest.hpp"

namespace fatigue::config {

// Minimal TOML subset: [section] headers, key = value pairs, comments
// with '#', values either "quoted strings", integers, floats or
// true/false. Enough for experiment configs; no arrays or nesting.
class Toml {
public:
    static Toml parse_file(const std::string& path);
    static Toml parse_string(const std::string& text,
                             const std::string& origin = "<string>");

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    // Keys present in the file but never read by any getter; used to
    // reject misspelled settings.
    std::vector<std::string> unread() const;

private:
    std::string origin_;
    std::map<std::string, std::string> values_;  // "section.key" -> raw token
    mutable std::set<std::string> accessed_;
};

struct PipelineConfig {
    struct Paths {
        std::string subjects = "subjects.csv";
        std::string rr = "rr.csv";
        std::string accel = "accel.csv";
        std::string temp = "temp.csv";
        std::string resp = "resp.csv";
        std::string labels = "labels.csv";
        std::string features = "features.csv";
    } paths;

    int tz_offset_minutes = 0;
    ingest::NominalRates rates;
    ingest::WindowPolicy policy;
    forest::ForestParams forest;
    int em_iters = 50;
    double gll_rel_tol = 1e-4;
    int cluster_bins = 3;
    int cv_k = 5;
    std::string cv_split = "record";
    double ridge_lambda = 1.0;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string out_dir = ".";
    std::vector<std::string> models = {"linear", "rf", "merf_age", "merf_bmi",
                                       "merf_age_bmi"};

    static PipelineConfig from_toml(const Toml& toml);  // rejects unknown keys
    static PipelineConfig load(const std::string& path);
};

// Companion to `synth streams`: records where the bundle lives and the
// rates it was generated with, so a later `extract` agrees with it.
void write_toml(const PipelineConfig& config, const std::string& path);

}  // namespace fatigue::config
