#include "fatigue/config.hpp"

#include <algorithm>
#include <cctype>

#include "fatigue/csv.hpp"
#include "fatigue/error.hpp"

namespace fatigue::config {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return s;
}

// Comment starts at the first '#' outside a quoted string.
std::string_view strip_comment(std::string_view line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') quoted = !quoted;
        else if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

}  // namespace

Toml Toml::parse_string(const std::string& text, const std::string& origin) {
    Toml toml;
    toml.origin_ = origin;
    std::string section;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) nl = text.size();
        std::string_view line{text.data() + pos, nl - pos};
        pos = nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        line = trim(strip_comment(line));
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3)
                throw Error(origin + ":" + std::to_string(line_no) +
                            ": malformed section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (section.empty())
                throw Error(origin + ":" + std::to_string(line_no) +
                            ": empty section name");
            continue;
        }

        std::size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            throw Error(origin + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
        std::string key{trim(line.substr(0, eq))};
        std::string value{trim(line.substr(eq + 1))};
        if (key.empty() || value.empty())
            throw Error(origin + ":" + std::to_string(line_no) +
                        ": empty key or value");
        std::string full = section.empty() ? key : section + "." + key;
        if (toml.values_.count(full))
            throw Error(origin + ":" + std::to_string(line_no) +
                        ": duplicate key '" + full + "'");
        toml.values_[full] = value;
    }
    return toml;
}

Toml Toml::parse_file(const std::string& path) {
    csv::LineReader reader(path);
    std::string text;
    while (auto line = reader.next()) {
        text.append(*line);
        text.push_back('\n');
    }
    return parse_string(text, path);
}

bool Toml::has(const std::string& key) const { return values_.count(key) != 0; }

std::string Toml::get_string(const std::string& key,
                             const std::string& fallback) const {
    accessed_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string& raw = it->second;
    if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"')
        return raw.substr(1, raw.size() - 2);
    return raw;
}

std::int64_t Toml::get_int(const std::string& key, std::int64_t fallback) const {
    accessed_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    auto parsed = csv::parse_int(it->second);
    if (!parsed)
        throw Error(origin_ + ": key '" + key + "' is not an integer: " + it->second);
    return *parsed;
}

double Toml::get_double(const std::string& key, double fallback) const {
    accessed_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    auto parsed = csv::parse_double(it->second);
    if (!parsed)
        throw Error(origin_ + ": key '" + key + "' is not a number: " + it->second);
    return *parsed;
}

bool Toml::get_bool(const std::string& key, bool fallback) const {
    accessed_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true") return true;
    if (it->second == "false") return false;
    throw Error(origin_ + ": key '" + key + "' is not true/false: " + it->second);
}

std::vector<std::string> Toml::unread() const {
    std::vector<std::string> out;
    for (const auto& [key, value] : values_)
        if (!accessed_.count(key)) out.push_back(key);
    return out;
}

namespace {

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        std::string item{trim(std::string_view(text).substr(pos, comma - pos))};
        if (!item.empty()) out.push_back(std::move(item));
        pos = comma + 1;
    }
    return out;
}

}  // namespace

PipelineConfig PipelineConfig::from_toml(const Toml& toml) {
    PipelineConfig c;
    c.paths.subjects = toml.get_string("paths.subjects", c.paths.subjects);
    c.paths.rr = toml.get_string("paths.rr", c.paths.rr);
    c.paths.accel = toml.get_string("paths.accel", c.paths.accel);
    c.paths.temp = toml.get_string("paths.temp", c.paths.temp);
    c.paths.resp = toml.get_string("paths.resp", c.paths.resp);
    c.paths.labels = toml.get_string("paths.labels", c.paths.labels);
    c.paths.features = toml.get_string("paths.features", c.paths.features);

    c.tz_offset_minutes =
        static_cast<int>(toml.get_int("ingest.tz_offset_minutes", c.tz_offset_minutes));
    c.rates.rr_per_s = toml.get_double("rates.rr_per_s", c.rates.rr_per_s);
    c.rates.accel_hz = toml.get_double("rates.accel_hz", c.rates.accel_hz);
    c.rates.temp_hz = toml.get_double("rates.temp_hz", c.rates.temp_hz);
    c.rates.resp_hz = toml.get_double("rates.resp_hz", c.rates.resp_hz);
    c.policy.min_window_coverage =
        toml.get_double("windows.min_window_coverage", c.policy.min_window_coverage);
    c.policy.rr_min_intervals =
        static_cast<int>(toml.get_int("windows.rr_min_intervals", c.policy.rr_min_intervals));
    c.policy.min_valid_windows =
        static_cast<int>(toml.get_int("windows.min_valid_windows", c.policy.min_valid_windows));

    c.forest.n_trees = static_cast<int>(toml.get_int("forest.n_trees", c.forest.n_trees));
    c.forest.mtry = static_cast<int>(toml.get_int("forest.mtry", c.forest.mtry));
    c.forest.min_samples_leaf =
        static_cast<int>(toml.get_int("forest.min_samples_leaf", c.forest.min_samples_leaf));
    c.forest.max_depth = static_cast<int>(toml.get_int("forest.max_depth", c.forest.max_depth));
    c.forest.bootstrap = toml.get_bool("forest.bootstrap", c.forest.bootstrap);

    c.em_iters = static_cast<int>(toml.get_int("merf.em_iters", c.em_iters));
    c.gll_rel_tol = toml.get_double("merf.gll_rel_tol", c.gll_rel_tol);
    c.cluster_bins = static_cast<int>(toml.get_int("merf.cluster_bins", c.cluster_bins));

    c.cv_k = static_cast<int>(toml.get_int("cv.k", c.cv_k));
    c.cv_split = toml.get_string("cv.split", c.cv_split);
    c.ridge_lambda = toml.get_double("cv.ridge_lambda", c.ridge_lambda);

    c.seed = static_cast<std::uint64_t>(toml.get_int("run.seed", static_cast<std::int64_t>(c.seed)));
    c.threads = static_cast<int>(toml.get_int("run.threads", c.threads));
    c.out_dir = toml.get_string("run.out_dir", c.out_dir);
    std::string models = toml.get_string("run.models", "");
    if (!models.empty()) c.models = split_list(models);

    auto unknown = toml.unread();
    if (!unknown.empty())
        throw Error("unknown config key '" + unknown.front() + "'");

    if (c.cv_k < 2) throw Error("config: cv.k must be >= 2");
    if (c.cv_split != "record" && c.cv_split != "subject")
        throw Error("config: cv.split must be 'record' or 'subject'");
    if (c.threads < 1) throw Error("config: run.threads must be >= 1");
    return c;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
    return from_toml(Toml::parse_file(path));
}

void write_toml(const PipelineConfig& config, const std::string& path) {
    csv::Writer out(path);
    auto str = [&](const char* key, const std::string& value) {
        out.write(key);
        out.write(" = \"" + value + "\"\n");
    };
    auto num = [&](const char* key, double value) {
        out.write(key);
        out.write(" = ");
        out.write_double(value);
        out.write("\n");
    };
    auto integer = [&](const char* key, std::int64_t value) {
        out.write(key);
        out.write(" = ");
        out.write_int(value);
        out.write("\n");
    };

    out.write("[paths]\n");
    str("subjects", config.paths.subjects);
    str("rr", config.paths.rr);
    str("accel", config.paths.accel);
    str("temp", config.paths.temp);
    str("resp", config.paths.resp);
    str("labels", config.paths.labels);
    str("features", config.paths.features);
    out.write("\n[ingest]\n");
    integer("tz_offset_minutes", config.tz_offset_minutes);
    out.write("\n[rates]\n");
    num("rr_per_s", config.rates.rr_per_s);
    num("accel_hz", config.rates.accel_hz);
    num("temp_hz", config.rates.temp_hz);
    num("resp_hz", config.rates.resp_hz);
    out.write("\n[windows]\n");
    num("min_window_coverage", config.policy.min_window_coverage);
    integer("rr_min_intervals", config.policy.rr_min_intervals);
    integer("min_valid_windows", config.policy.min_valid_windows);
    out.write("\n[forest]\n");
    integer("n_trees", config.forest.n_trees);
    integer("mtry", config.forest.mtry);
    integer("min_samples_leaf", config.forest.min_samples_leaf);
    integer("max_depth", config.forest.max_depth);
    out.write(config.forest.bootstrap ? "bootstrap = true\n" : "bootstrap = false\n");
    out.write("\n[merf]\n");
    integer("em_iters", config.em_iters);
    num("gll_rel_tol", config.gll_rel_tol);
    integer("cluster_bins", config.cluster_bins);
    out.write("\n[cv]\n");
    integer("k", config.cv_k);
    str("split", config.cv_split);
    num("ridge_lambda", config.ridge_lambda);
    out.write("\n[run]\n");
    integer("seed", static_cast<std::int64_t>(config.seed));
    integer("threads", config.threads);
    str("out_dir", config.out_dir);
    std::string models;
    for (const auto& m : config.models) {
        if (!models.empty()) models += ",";
        models += m;
    }
    str("models", models);
    out.close();
}

}  // namespace fatigue::config
