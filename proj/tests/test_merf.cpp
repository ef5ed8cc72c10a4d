#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <vector>

#include "fatigue/merf.hpp"
#include "fatigue/rng.hpp"
#include "oracle.hpp"

namespace merf = fatigue::merf;
namespace forest = fatigue::forest;
using fatigue::Matrix;
using doctest::Approx;

namespace {

merf::MerfParams small_params(std::uint64_t seed, int trees = 25) {
    merf::MerfParams params;
    params.forest.n_trees = trees;
    params.forest.seed = seed;
    params.forest.min_samples_leaf = 3;
    return params;
}

struct Toy {
    Matrix X;
    std::vector<double> y;
    std::vector<int> clusters;
};

// Linear signal plus per-cluster intercepts, small enough for fast EM.
Toy toy_data(std::uint64_t seed, std::size_t q, std::size_t per_cluster,
             double sigma_b, double sigma_e) {
    fatigue::Rng rng(seed);
    Toy toy;
    const std::size_t n = q * per_cluster;
    toy.X = Matrix(n, 3);
    toy.y.resize(n);
    toy.clusters.resize(n);
    std::vector<double> b(q);
    for (auto& v : b) v = sigma_b * rng.normal();
    std::size_t row = 0;
    for (std::size_t c = 0; c < q; ++c) {
        for (std::size_t k = 0; k < per_cluster; ++k, ++row) {
            for (std::size_t j = 0; j < 3; ++j)
                toy.X.at(row, j) = rng.uniform();
            toy.clusters[row] = static_cast<int>(c);
            toy.y[row] = 5.0 * toy.X.at(row, 0) + 2.0 * toy.X.at(row, 1) +
                         b[c] + sigma_e * rng.normal();
        }
    }
    return toy;
}

}  // namespace

TEST_SUITE("merf") {

TEST_CASE("estep shrinks a worked two-point cluster") {
    // One cluster, residuals {1, 1}, unit variances:
    // b = 2 * 1 / (2 * 1 + 1) = 2/3.
    std::vector<double> r{1.0, 1.0};
    std::vector<int> c{0, 0};
    auto b = merf::estep(r, c, 1.0, 1.0);
    REQUIRE(b.size() == 1);
    CHECK(b.at(0) == Approx(2.0 / 3.0).epsilon(1e-15));

    // Same number from the dense route: V = [[2,1],[1,2]].
    auto dense = oracle::dense_estep(r, c, 1.0, 1.0);
    CHECK(b.at(0) == Approx(dense.at(0)).epsilon(1e-12));
}

TEST_CASE("estep with zero between-variance returns zero intercepts") {
    std::vector<double> r{3.0, -1.0, 2.0, 0.5};
    std::vector<int> c{0, 0, 1, 1};
    auto b = merf::estep(r, c, 1.0, 0.0);
    CHECK(b.at(0) == 0.0);
    CHECK(b.at(1) == 0.0);
}

TEST_CASE("shrinkage grows with cluster size and prior variance") {
    // Mean residual fixed at 1; more points pull b toward 1.
    double prev = 0.0;
    for (std::size_t n : {1u, 2u, 5u, 20u, 100u}) {
        std::vector<double> r(n, 1.0);
        std::vector<int> c(n, 0);
        double b = merf::estep(r, c, 1.0, 1.0).at(0);
        CHECK(b > prev);
        CHECK(b < 1.0);
        prev = b;
    }

    // Larger prior variance also weakens shrinkage.
    std::vector<double> r{1.0, 1.0};
    std::vector<int> c{0, 0};
    double weak = merf::estep(r, c, 1.0, 0.5).at(0);
    double strong = merf::estep(r, c, 1.0, 5.0).at(0);
    CHECK(weak < strong);
    CHECK(strong < 1.0);
}

TEST_CASE("estep ignores row ordering") {
    std::vector<double> r{1.0, -2.0, 0.5, 3.0, 0.0, 1.5};
    std::vector<int> c{0, 1, 0, 2, 1, 2};
    auto a = merf::estep(r, c, 0.7, 1.9);

    std::vector<double> r2{0.5, 1.0, 3.0, 1.5, -2.0, 0.0};
    std::vector<int> c2{0, 0, 2, 2, 1, 1};
    auto b = merf::estep(r2, c2, 0.7, 1.9);
    REQUIRE(a.size() == b.size());
    for (const auto& [id, val] : a) CHECK(val == Approx(b.at(id)).epsilon(1e-15));
}

TEST_CASE("update_variance floors at zero residual") {
    // Perfect fit, b = 0, sigma_b^2 = 0: both updates collapse.
    std::vector<double> r{0.0, 0.0, 0.0};
    std::vector<int> c{0, 0, 0};
    std::map<int, double> b{{0, 0.0}};
    auto [s2, sb2] = merf::update_variance(r, b, c, 1e-9, 0.0);
    CHECK(s2 == 1e-8);  // floor
    CHECK(sb2 == 0.0);
}

TEST_CASE("variance updates match the dense oracle") {
    fatigue::Rng rng(555);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t q = 1 + rng.bounded(5);
        std::vector<double> residuals;
        std::vector<int> clusters;
        for (std::size_t i = 0; i < q; ++i) {
            const std::size_t ni = 1 + rng.bounded(6);
            for (std::size_t k = 0; k < ni; ++k) {
                residuals.push_back(rng.normal(0.0, 2.0));
                clusters.push_back(static_cast<int>(i));
            }
        }
        const double s2 = 0.1 + 3.0 * rng.uniform();
        const double sb2 = 0.05 + 2.0 * rng.uniform();

        auto b = merf::estep(residuals, clusters, s2, sb2);
        auto want_b = oracle::dense_estep(residuals, clusters, s2, sb2);
        REQUIRE(b.size() == want_b.size());
        for (const auto& [id, val] : b)
            CHECK(val == Approx(want_b.at(id)).epsilon(1e-10));

        auto [ns2, nsb2] = merf::update_variance(residuals, b, clusters, s2, sb2);
        auto [ws2, wsb2] = oracle::dense_update(residuals, b, clusters, s2, sb2);
        CHECK(ns2 == Approx(ws2).epsilon(1e-10));
        CHECK(nsb2 == Approx(wsb2).epsilon(1e-10));

        CHECK(merf::gll(residuals, b, clusters, s2, sb2) ==
              Approx(oracle::dense_gll(residuals, b, clusters, s2, sb2))
                  .epsilon(1e-10));
    }
}

TEST_CASE("gll hand examples") {
    // Single cluster, single point, e = 0, b = 0, s2 = 1, sb2 = 1:
    // 0/1 + 1*ln(1) + 0/1 + ln(1) = 0.
    std::vector<double> r{0.0};
    std::vector<int> c{0};
    std::map<int, double> b{{0, 0.0}};
    CHECK(merf::gll(r, b, c, 1.0, 1.0) == 0.0);

    // e = 2 adds e^2 / s2 = 4.
    std::vector<double> r2{2.0};
    CHECK(merf::gll(r2, b, c, 1.0, 1.0) == Approx(4.0));

    // b-terms are dropped at sb2 = 0 instead of dividing by zero.
    CHECK(merf::gll(r2, b, c, 1.0, 0.0) == Approx(4.0));
    CHECK(std::isfinite(merf::gll(r2, b, c, 2.0, 0.0)));

    // Larger residuals never decrease the criterion.
    std::vector<double> r3{3.0};
    CHECK(merf::gll(r3, b, c, 1.0, 1.0) > merf::gll(r2, b, c, 1.0, 1.0));
}

TEST_CASE("fit_merf recovers cluster offsets") {
    auto toy = toy_data(100, 6, 30, 3.0, 0.5);
    auto model = merf::fit_merf(toy.X, toy.y, toy.clusters,
                                small_params(100));

    CHECK(model.intercepts.size() == 6);
    CHECK(model.trace.size() >= 2);
    CHECK(model.trace.size() <= 50);
    CHECK(model.sigma_b2 > 0.5);  // truth 9, loose floor

    // Cluster-aware predictions beat ignoring the cluster on most rows.
    std::size_t better = 0, total = 0;
    for (std::size_t i = 0; i < toy.X.rows(); ++i) {
        double with_b = merf::predict(model, {toy.X.row(i), toy.X.cols()},
                                      toy.clusters[i]);
        double without = merf::predict(model, {toy.X.row(i), toy.X.cols()},
                                       std::nullopt);
        if (std::abs(with_b - toy.y[i]) <= std::abs(without - toy.y[i]))
            ++better;
        ++total;
    }
    CHECK(static_cast<double>(better) / static_cast<double>(total) > 0.8);
}

TEST_CASE("per-cluster residuals improve for most clusters") {
    auto toy = toy_data(321, 8, 25, 2.5, 0.7);
    auto model = merf::fit_merf(toy.X, toy.y, toy.clusters,
                                small_params(321));
    std::map<int, double> sse_with, sse_without;
    for (std::size_t i = 0; i < toy.X.rows(); ++i) {
        double w = merf::predict(model, {toy.X.row(i), toy.X.cols()},
                                 toy.clusters[i]);
        double wo = merf::predict(model, {toy.X.row(i), toy.X.cols()},
                                  std::nullopt);
        sse_with[toy.clusters[i]] += (w - toy.y[i]) * (w - toy.y[i]);
        sse_without[toy.clusters[i]] += (wo - toy.y[i]) * (wo - toy.y[i]);
    }
    int improved = 0;
    for (const auto& [id, sse] : sse_with)
        if (sse <= sse_without.at(id)) ++improved;
    CHECK(improved >= 7);  // at least 80% of the 8 clusters
}

TEST_CASE("zero between-variance degenerates to a plain forest") {
    auto toy = toy_data(7, 5, 20, 0.0, 0.5);
    merf::MerfParams params = small_params(7);
    params.initial_sigma_b2 = 0.0;  // start and stay at the null model
    auto model = merf::fit_merf(toy.X, toy.y, toy.clusters, params);
    for (const auto& [id, b] : model.intercepts) CHECK(b == 0.0);
    CHECK(model.sigma_b2 == 0.0);

    // With every intercept pinned to zero the fixed effect sees y
    // unchanged, so it must equal a forest fit directly on y.
    auto plain = forest::fit_forest(toy.X, toy.y, params.forest);
    for (std::size_t i = 0; i < toy.X.rows(); ++i)
        CHECK(merf::predict(model, {toy.X.row(i), toy.X.cols()},
                            toy.clusters[i]) ==
              plain.predict({toy.X.row(i), toy.X.cols()}));
}

TEST_CASE("termination and a mostly decreasing criterion") {
    int improved = 0;
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        auto toy = toy_data(seed, 4, 15, 1.5, 0.8);
        auto model = merf::fit_merf(toy.X, toy.y, toy.clusters,
                                    small_params(seed, 15));
        REQUIRE(!model.trace.empty());
        CHECK(model.trace.size() <= 50);
        if (model.trace.back().gll <= model.initial_gll + 1e-9)
            ++improved;
        for (const auto& it : model.trace) {
            CHECK(std::isfinite(it.gll));
            CHECK(it.sigma2 > 0.0);
            CHECK(it.sigma_b2 >= 0.0);
        }
    }
    // The forest refit is not an exact M-step, so allow one regression.
    CHECK(improved >= 5);
}

TEST_CASE("a single point per cluster still works") {
    fatigue::Rng rng(64);
    Matrix X(8, 2);
    std::vector<double> y(8);
    std::vector<int> clusters(8);
    for (std::size_t i = 0; i < 8; ++i) {
        X.at(i, 0) = rng.uniform();
        X.at(i, 1) = rng.uniform();
        y[i] = X.at(i, 0) + rng.normal(0.0, 0.3);
        clusters[i] = static_cast<int>(i);
    }
    auto params = small_params(3, 10);
    params.forest.min_samples_leaf = 2;
    auto model = merf::fit_merf(X, y, clusters, params);
    CHECK(model.intercepts.size() == 8);
    for (const auto& [id, b] : model.intercepts) CHECK(std::isfinite(b));
}

TEST_CASE("fit_merf validates its inputs") {
    Matrix X(4, 2, 0.5);
    std::vector<double> y{1, 2, 3};
    std::vector<int> c{0, 0, 1, 1};
    CHECK_THROWS(merf::fit_merf(X, y, c, small_params(1)));  // size mismatch
    std::vector<double> y4{1, 2, 3, 4};
    std::vector<int> c3{0, 0, 1};
    CHECK_THROWS(merf::fit_merf(X, y4, c3, small_params(1)));
    auto bad = small_params(1);
    bad.max_em_iters = 0;
    CHECK_THROWS(merf::fit_merf(X, y4, c, bad));
}

TEST_CASE("unknown clusters fall back to the fixed effect") {
    auto toy = toy_data(15, 4, 20, 2.0, 0.5);
    auto model = merf::fit_merf(toy.X, toy.y, toy.clusters,
                                small_params(15, 15));
    std::vector<double> x{0.3, 0.6, 0.9};
    double plain = model.fixed_effect.predict(x);
    CHECK(merf::predict(model, x, std::nullopt) == plain);
    CHECK(merf::predict(model, x, 999) == plain);
    CHECK(merf::predict(model, x, 0) != plain);
}

TEST_CASE("stored intercepts are consistent with stored variances") {
    auto toy = toy_data(92, 5, 24, 2.0, 0.6);
    auto model = merf::fit_merf(toy.X, toy.y, toy.clusters,
                                small_params(92, 20));
    // Recompute the e-step from the final forest and variances; the model
    // must store exactly that refresh.
    auto fixed = model.fixed_effect.predict_rows(toy.X);
    std::vector<double> residuals(toy.y.size());
    for (std::size_t i = 0; i < residuals.size(); ++i)
        residuals[i] = toy.y[i] - fixed[i];
    auto refreshed = merf::estep(residuals, toy.clusters, model.sigma2,
                                 model.sigma_b2);
    REQUIRE(refreshed.size() == model.intercepts.size());
    for (const auto& [id, b] : refreshed)
        CHECK(model.intercepts.at(id) == b);
}

TEST_CASE("merf json round trip is byte-exact") {
    auto toy = toy_data(55, 4, 18, 1.5, 0.5);
    auto model = merf::fit_merf(toy.X, toy.y, toy.clusters,
                                small_params(55, 12));
    auto text = merf::to_json(model);
    auto back = merf::merf_from_json(text);
    CHECK(merf::to_json(back) == text);
    CHECK(back.sigma2 == model.sigma2);
    CHECK(back.sigma_b2 == model.sigma_b2);
    CHECK(back.intercepts == model.intercepts);
    for (std::size_t i = 0; i < toy.X.rows(); ++i)
        CHECK(merf::predict(back, {toy.X.row(i), toy.X.cols()},
                            toy.clusters[i]) ==
              merf::predict(model, {toy.X.row(i), toy.X.cols()},
                            toy.clusters[i]));

    auto path = std::filesystem::temp_directory_path() / "fatigue_merf.json";
    merf::save_merf(model, path.string());
    auto loaded = merf::load_merf(path.string());
    CHECK(merf::to_json(loaded) == text);

    CHECK_THROWS(merf::merf_from_json("{\"kind\":\"forest\"}"));
}

TEST_CASE("cluster scheme quantile edges on the three-age example") {
    std::vector<fatigue::ingest::SubjectRecord> subjects{
        {"a", 25, 22.0}, {"b", 40, 24.0}, {"c", 60, 28.0}};
    auto scheme = merf::ClusterScheme::fit(merf::ClusterMode::Age, subjects, 3);
    REQUIRE(scheme.age_edges.size() == 2);
    // Sorted ages {25, 40, 60}: edges at p33.3 and p66.7.
    CHECK(scheme.age_edges[0] == Approx(35.0));
    CHECK(scheme.age_edges[1] == Approx(140.0 / 3.0));
    CHECK(scheme.n_clusters() == 3);

    // Each subject gets its own bin.
    CHECK(scheme.cluster_of(25, 0) == 0);
    CHECK(scheme.cluster_of(40, 0) == 1);
    CHECK(scheme.cluster_of(60, 0) == 2);
    // Outside values clamp into the edge bins.
    CHECK(scheme.cluster_of(18, 0) == 0);
    CHECK(scheme.cluster_of(95, 0) == 2);
}

TEST_CASE("single-bin scheme maps everyone to cluster zero") {
    std::vector<fatigue::ingest::SubjectRecord> subjects{
        {"a", 25, 22.0}, {"b", 40, 24.0}};
    auto scheme = merf::ClusterScheme::fit(merf::ClusterMode::Age, subjects, 1);
    CHECK(scheme.n_clusters() == 1);
    CHECK(scheme.cluster_of(25, 0) == 0);
    CHECK(scheme.cluster_of(99, 0) == 0);
}

TEST_CASE("combined mode forms a bin grid") {
    std::vector<fatigue::ingest::SubjectRecord> subjects;
    fatigue::Rng rng(26);
    for (int i = 0; i < 30; ++i)
        subjects.push_back({"s" + std::to_string(i),
                            static_cast<int>(25 + rng.bounded(50)),
                            18.0 + 14.0 * rng.uniform()});
    auto scheme =
        merf::ClusterScheme::fit(merf::ClusterMode::AgeAndBmi, subjects, 3);
    CHECK(scheme.n_clusters() == 9);
    REQUIRE(scheme.age_edges.size() == 2);
    REQUIRE(scheme.bmi_edges.size() == 2);

    // id = age_bin * 3 + bmi_bin.
    CHECK(scheme.cluster_of(20, 15.0) == 0);
    CHECK(scheme.cluster_of(20, 40.0) == 2);
    CHECK(scheme.cluster_of(90, 15.0) == 6);
    CHECK(scheme.cluster_of(90, 40.0) == 8);

    auto assigned = merf::assign_clusters(subjects, scheme);
    CHECK(assigned.size() == subjects.size());
    for (const auto& s : subjects) {
        int id = assigned.at(s.subject_id);
        CHECK(id >= 0);
        CHECK(id < 9);
        CHECK(id == scheme.cluster_of(s.age, s.bmi));
    }
}

TEST_CASE("bmi mode uses only bmi") {
    std::vector<fatigue::ingest::SubjectRecord> subjects{
        {"a", 25, 20.0}, {"b", 60, 25.0}, {"c", 40, 30.0}};
    auto scheme = merf::ClusterScheme::fit(merf::ClusterMode::Bmi, subjects, 3);
    CHECK(scheme.age_edges.empty());
    CHECK(scheme.n_clusters() == 3);
    CHECK(scheme.cluster_of(99, 20.0) == 0);
    CHECK(scheme.cluster_of(1, 30.0) == 2);
}

TEST_CASE("mode names round-trip") {
    using merf::ClusterMode;
    CHECK(merf::cluster_mode_name(ClusterMode::Age) == "age");
    CHECK(merf::cluster_mode_name(ClusterMode::Bmi) == "bmi");
    CHECK(merf::cluster_mode_name(ClusterMode::AgeAndBmi) == "age_bmi");
    CHECK(merf::cluster_mode_from_name("age") == ClusterMode::Age);
    CHECK(merf::cluster_mode_from_name("age_bmi") == ClusterMode::AgeAndBmi);
    CHECK_THROWS(merf::cluster_mode_from_name("shoe_size"));
}

}  // TEST_SUITE
