#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "fatigue/csv.hpp"
#include "fatigue/ingest.hpp"
#include "fatigue/synth.hpp"

namespace synth = fatigue::synth;
namespace ingest = fatigue::ingest;
namespace csv = fatigue::csv;

namespace {

std::string slurp(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

std::filesystem::path fresh_dir(const std::string& leaf) {
    auto dir = std::filesystem::temp_directory_path() / "fatigue_synth_tests" / leaf;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

double sample_var(const std::vector<double>& xs) {
    double mean = 0.0;
    for (double v : xs) mean += v;
    mean /= static_cast<double>(xs.size());
    double acc = 0.0;
    for (double v : xs) acc += (v - mean) * (v - mean);
    return acc / static_cast<double>(xs.size() - 1);
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("friedman1 hand values") {
    std::vector<double> half(5, 0.5);
    CHECK(synth::friedman1(half) ==
          doctest::Approx(10.0 * std::sqrt(0.5) + 7.5).epsilon(1e-12));

    std::vector<double> zeros(5, 0.0);
    CHECK(synth::friedman1(zeros) == doctest::Approx(5.0).epsilon(1e-12));

    std::vector<double> peak{1.0, 0.5, 0.5, 0.0, 0.0};
    CHECK(synth::friedman1(peak) == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("friedman1 ignores trailing coordinates") {
    std::vector<double> five{0.1, 0.9, 0.3, 0.7, 0.2};
    std::vector<double> ten = five;
    ten.insert(ten.end(), {123.0, -4.0, 0.5, 0.5, 99.0});
    CHECK(synth::friedman1(five) == synth::friedman1(ten));
}

TEST_CASE("friedman1 rejects short inputs") {
    std::vector<double> four(4, 0.5);
    CHECK_THROWS(synth::friedman1(four));
}

TEST_CASE("gen_clustered shapes and cluster layout") {
    synth::SynthSpec spec;
    spec.n_clusters = 6;
    spec.points_per_cluster = 9;
    spec.seed = 3;
    auto data = synth::gen_clustered(spec);
    CHECK(data.X.rows() == 54);
    CHECK(data.X.cols() == 10);
    CHECK(data.y.size() == 54);
    CHECK(data.clusters.size() == 54);
    CHECK(data.truth.intercepts.size() == 6);
    CHECK(data.truth.fixed.size() == 54);
    for (std::size_t r = 0; r < 54; ++r) {
        CHECK(data.clusters[r] == static_cast<int>(r / 9));
        for (std::size_t d = 0; d < 10; ++d) {
            CHECK(data.X.at(r, d) >= 0.0);
            CHECK(data.X.at(r, d) < 1.0);
        }
    }
    CHECK(data.truth.sigma_b2 == 4.0);
    CHECK(data.truth.sigma_e2 == 1.0);
}

TEST_CASE("gen_clustered fixed effect matches the formula bitwise") {
    synth::SynthSpec spec;
    spec.n_clusters = 4;
    spec.points_per_cluster = 10;
    spec.seed = 11;
    auto data = synth::gen_clustered(spec);
    for (std::size_t r = 0; r < data.X.rows(); ++r) {
        std::span<const double> x{data.X.row(r), 10};
        CHECK(data.truth.fixed[r] == synth::friedman1(x));
    }

    spec.fixed = synth::FixedEffect::Linear;
    auto lin = synth::gen_clustered(spec);
    for (std::size_t r = 0; r < lin.X.rows(); ++r)
        CHECK(lin.truth.fixed[r] ==
              10.0 * lin.X.at(r, 0) + 5.0 * lin.X.at(r, 1));
}

TEST_CASE("gen_clustered intercepts recentred with the right spread") {
    synth::SynthSpec spec;
    spec.n_clusters = 400;
    spec.points_per_cluster = 1;
    spec.sigma_b = 2.0;
    spec.seed = 7;
    auto data = synth::gen_clustered(spec);
    double mean = 0.0;
    for (double b : data.truth.intercepts) mean += b;
    mean /= 400.0;
    CHECK(std::abs(mean) < 1e-9);
    double var = sample_var(data.truth.intercepts);
    CHECK(var > 3.0);
    CHECK(var < 5.2);
}

TEST_CASE("gen_clustered residual noise has the requested scale") {
    synth::SynthSpec spec;
    spec.n_clusters = 8;
    spec.points_per_cluster = 100;
    spec.sigma_e = 1.5;
    spec.seed = 19;
    auto data = synth::gen_clustered(spec);
    std::vector<double> resid(data.y.size());
    for (std::size_t r = 0; r < data.y.size(); ++r)
        resid[r] = data.y[r] - data.truth.fixed[r] -
                   data.truth.intercepts[static_cast<std::size_t>(data.clusters[r])];
    double sd = std::sqrt(sample_var(resid));
    CHECK(sd > 1.2);
    CHECK(sd < 1.8);
}

TEST_CASE("gen_clustered sigma_b zero gives all-zero intercepts") {
    synth::SynthSpec spec;
    spec.sigma_b = 0.0;
    spec.n_clusters = 10;
    spec.points_per_cluster = 5;
    spec.seed = 2;
    auto data = synth::gen_clustered(spec);
    for (double b : data.truth.intercepts) CHECK(b == 0.0);
    for (std::size_t r = 0; r < data.y.size(); ++r)
        CHECK(std::abs(data.y[r] - data.truth.fixed[r]) < 6.0);
}

TEST_CASE("gen_clustered is deterministic in the seed") {
    synth::SynthSpec spec;
    spec.seed = 42;
    spec.n_clusters = 5;
    spec.points_per_cluster = 8;
    auto a = synth::gen_clustered(spec);
    auto b = synth::gen_clustered(spec);
    CHECK(a.y == b.y);
    CHECK(a.truth.intercepts == b.truth.intercepts);
    CHECK(a.X.data() == b.X.data());

    spec.seed = 43;
    auto c = synth::gen_clustered(spec);
    CHECK(a.y != c.y);
}

TEST_CASE("gen_clustered validates its spec") {
    synth::SynthSpec spec;
    spec.n_clusters = 0;
    CHECK_THROWS(synth::gen_clustered(spec));
    spec = {};
    spec.points_per_cluster = 0;
    CHECK_THROWS(synth::gen_clustered(spec));
    spec = {};
    spec.sigma_b = -0.5;
    CHECK_THROWS(synth::gen_clustered(spec));
    spec = {};
    spec.sigma_e = 0.0;
    CHECK_THROWS(synth::gen_clustered(spec));
}

TEST_CASE("write_clustered round-trips rows bitwise") {
    synth::SynthSpec spec;
    spec.n_clusters = 3;
    spec.points_per_cluster = 7;
    spec.seed = 5;
    auto data = synth::gen_clustered(spec);
    auto dir = fresh_dir("clustered");
    auto features = (dir / "synth_features.csv").string();
    auto truth = (dir / "synth_truth.json").string();
    synth::write_clustered(data, features, truth);

    csv::LineReader reader(features);
    auto header = reader.next();
    REQUIRE(header.has_value());
    CHECK(*header == "cluster,y,x0,x1,x2,x3,x4,x5,x6,x7,x8,x9");
    std::vector<std::string_view> fields;
    std::size_t row = 0;
    while (auto line = reader.next()) {
        fields.clear();
        csv::split(*line, fields);
        REQUIRE(fields.size() == 12);
        CHECK(csv::parse_int(fields[0]) == data.clusters[row]);
        double y = *csv::parse_double(fields[1]);
        CHECK(std::memcmp(&y, &data.y[row], sizeof y) == 0);
        for (std::size_t d = 0; d < 10; ++d) {
            double x = *csv::parse_double(fields[2 + d]);
            double want = data.X.at(row, d);
            CHECK(std::memcmp(&x, &want, sizeof x) == 0);
        }
        ++row;
    }
    CHECK(row == 21);

    auto doc = nlohmann::json::parse(slurp(truth));
    CHECK(doc.at("kind") == "synth_truth");
    CHECK(doc.at("sigma_b2").get<double>() == data.truth.sigma_b2);
    CHECK(doc.at("intercepts").size() == 3);
    CHECK(doc.at("fixed").size() == 21);
}

TEST_CASE("gen_streams bundle parses cleanly end to end") {
    synth::StreamsSpec spec;
    spec.n_subjects = 2;
    spec.days = 1;
    spec.seed = 9;
    auto dir = fresh_dir("streams");
    auto summary = synth::gen_streams(spec, dir.string());

    auto subjects = ingest::parse_subjects((dir / "subjects.csv").string());
    REQUIRE(subjects.size() == 2);
    CHECK(subjects[0].subject_id == "S01");
    CHECK(subjects[1].subject_id == "S02");
    for (const auto& s : subjects) {
        CHECK(s.age > 0);
        CHECK(s.age < 130);
        // One decimal of BMI.
        CHECK(std::abs(s.bmi * 10.0 - std::round(s.bmi * 10.0)) < 1e-9);
    }

    auto labels = ingest::parse_labels((dir / "labels.csv").string());
    CHECK(summary.n_labels == 8);  // 2 subjects x 1 day x 4 slots
    REQUIRE(labels.size() == 8);
    for (const auto& l : labels) {
        CHECK((l.slot_start_ms - synth::kSynthEpochMs) % ingest::kSlotMs == 0);
        CHECK(l.score >= 0);
        CHECK(l.score <= 10);
    }

    const std::int64_t end = synth::kSynthEpochMs + 24LL * 3600 * 1000;
    auto rr = ingest::parse_stream((dir / "rr.csv").string(),
                                   fatigue::Modality::RR);
    CHECK(rr.stats.bad_rows == 0);
    CHECK(rr.stats.dropped_out_of_range == 0);
    CHECK(rr.stats.dropped_non_monotonic == 0);
    REQUIRE(rr.by_subject.size() == 2);
    std::size_t rr_rows = 0;
    for (const auto& [id, stream] : rr.by_subject) {
        rr_rows += stream.ts.size();
        CHECK(stream.ts.size() > 50000);  // beats over a full day
        CHECK(stream.ts.front() >= synth::kSynthEpochMs);
        CHECK(stream.ts.back() < end);
        for (double v : stream.x) {
            CHECK(v > 200.0);
            CHECK(v < 3000.0);
        }
    }
    CHECK(rr_rows == summary.rows[fatigue::index_of(fatigue::Modality::RR)]);

    auto accel = ingest::parse_stream((dir / "accel.csv").string(),
                                      fatigue::Modality::ACCEL);
    CHECK(accel.stats.bad_rows == 0);
    std::size_t accel_rows = 0;
    for (const auto& [id, stream] : accel.by_subject) {
        accel_rows += stream.ts.size();
        CHECK(stream.ts.size() == 86400);  // 1 Hz, full day
        double z_mean = 0.0;
        for (double v : stream.z) z_mean += v;
        z_mean /= static_cast<double>(stream.z.size());
        CHECK(z_mean > 0.9);
        CHECK(z_mean < 1.1);
    }
    CHECK(accel_rows == summary.rows[fatigue::index_of(fatigue::Modality::ACCEL)]);

    for (auto [name, modality, per_subject] :
         {std::tuple{"temp.csv", fatigue::Modality::TEMP, std::size_t{21600}},
          std::tuple{"resp.csv", fatigue::Modality::RESP, std::size_t{21600}}}) {
        auto table = ingest::parse_stream((dir / name).string(), modality);
        CHECK(table.stats.bad_rows == 0);
        std::size_t rows = 0;
        for (const auto& [id, stream] : table.by_subject) {
            CHECK(stream.ts.size() == per_subject);  // 0.25 Hz, full day
            rows += stream.ts.size();
        }
        CHECK(rows == summary.rows[fatigue::index_of(modality)]);
    }
}

TEST_CASE("gen_streams reruns are byte-identical") {
    synth::StreamsSpec spec;
    spec.n_subjects = 1;
    spec.days = 1;
    spec.seed = 77;
    auto dir_a = fresh_dir("det_a");
    auto dir_b = fresh_dir("det_b");
    synth::gen_streams(spec, dir_a.string());
    synth::gen_streams(spec, dir_b.string());
    for (const char* name :
         {"subjects.csv", "labels.csv", "rr.csv", "accel.csv", "temp.csv", "resp.csv"}) {
        CHECK(slurp(dir_a / name) == slurp(dir_b / name));
    }

    spec.seed = 78;
    auto dir_c = fresh_dir("det_c");
    synth::gen_streams(spec, dir_c.string());
    CHECK(slurp(dir_a / "rr.csv") != slurp(dir_c / "rr.csv"));
}

TEST_CASE("gen_streams missingness removes rows without emptying streams") {
    synth::StreamsSpec spec;
    spec.n_subjects = 1;
    spec.days = 1;
    spec.seed = 31;
    auto full_dir = fresh_dir("full");
    auto full = synth::gen_streams(spec, full_dir.string());

    spec.missingness = 0.3;
    auto holey_dir = fresh_dir("holey");
    auto holey = synth::gen_streams(spec, holey_dir.string());

    for (std::size_t m = 0; m < fatigue::kModalityCount; ++m) {
        CHECK(holey.rows[m] > 0);
        CHECK(holey.rows[m] < full.rows[m]);
    }
    // Roughly the requested fraction should be gone from the dense streams.
    auto temp_idx = fatigue::index_of(fatigue::Modality::TEMP);
    double kept = static_cast<double>(holey.rows[temp_idx]) /
                  static_cast<double>(full.rows[temp_idx]);
    CHECK(kept < 0.9);
    CHECK(kept > 0.3);
}

TEST_CASE("gen_streams validates its spec") {
    auto dir = fresh_dir("invalid");
    synth::StreamsSpec spec;
    spec.n_subjects = 0;
    CHECK_THROWS(synth::gen_streams(spec, dir.string()));
    spec = {};
    spec.days = 0;
    CHECK_THROWS(synth::gen_streams(spec, dir.string()));
    spec = {};
    spec.missingness = -0.1;
    CHECK_THROWS(synth::gen_streams(spec, dir.string()));
    spec = {};
    spec.missingness = 1.0;
    CHECK_THROWS(synth::gen_streams(spec, dir.string()));
    spec = {};
    spec.accel_hz = 0.0;
    CHECK_THROWS(synth::gen_streams(spec, dir.string()));
}

}  // TEST_SUITE
