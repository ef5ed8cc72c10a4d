#include "doctest.h"

#include <cmath>
#include <vector>

#include "fatigue/hrv.hpp"
#include "fatigue/rng.hpp"
#include "fatigue/stats.hpp"
#include "oracle.hpp"

namespace hrv = fatigue::hrv;
using doctest::Approx;

namespace {

enum Idx {
    kMeanNn = 0, kSdnn, kRmssd, kSdsd, kPnn50, kPnn20, kCvnn, kCvsd,
    kMedianNn, kMadNn, kIqrNn, kMeanHr, kMinHr, kMaxHr,
    kVlf, kLf, kHf, kTotal, kLfNorm, kHfNorm, kLfHf, kHfPeak,
    kSd1, kSd2, kSd1Sd2, kEllipse, kSampen, kApen, kDfa, kTri
};

std::vector<double> noisy_rr(fatigue::Rng& rng, std::size_t n, double base,
                             double jitter) {
    std::vector<double> rr(n);
    for (auto& v : rr) v = base + rng.normal(0.0, jitter);
    return rr;
}

}  // namespace

TEST_SUITE("hrv") {

TEST_CASE("constant series has zero dispersion") {
    std::vector<double> rr(300, 800.0);
    auto f = hrv::hrv30(rr);
    CHECK(f[kMeanNn] == 800.0);
    CHECK(f[kSdnn] == 0.0);
    CHECK(f[kRmssd] == 0.0);
    CHECK(f[kSdsd] == 0.0);
    CHECK(f[kPnn50] == 0.0);
    CHECK(f[kPnn20] == 0.0);
    CHECK(f[kMeanHr] == Approx(75.0));  // 60000 / 800
    CHECK(f[kMinHr] == Approx(75.0));
    CHECK(f[kMaxHr] == Approx(75.0));
    CHECK(f[kSd1] == 0.0);
    CHECK(f[kSd2] == 0.0);
    CHECK(std::isnan(f[kDfa]));  // constant input
}

TEST_CASE("rmssd on a short hand-worked series") {
    std::vector<double> rr{800, 810, 790, 800};
    auto f = hrv::hrv30(rr);
    // diffs 10, -20, 10 -> mean square (100+400+100)/3
    CHECK(f[kRmssd] == Approx(std::sqrt(200.0)));
    CHECK(f[kMeanNn] == 800.0);
}

TEST_CASE("pnn50 counts strict exceedances") {
    std::vector<double> rr{800, 860, 870};
    auto f = hrv::hrv30(rr);
    // diffs 60, 10 -> one of two beyond 50 ms
    CHECK(f[kPnn50] == Approx(0.5));
    CHECK(f[kPnn20] == Approx(0.5));
}

TEST_CASE("time-domain features match the oracle") {
    fatigue::Rng rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        auto rr = noisy_rr(rng, 50 + rng.bounded(300), 850.0, 40.0);
        auto f = hrv::hrv30(rr);
        CHECK(f[kMeanNn] == Approx(oracle::mean(rr)).epsilon(1e-12));
        CHECK(f[kSdnn] == Approx(oracle::sdnn(rr)).epsilon(1e-12));
        CHECK(f[kRmssd] == Approx(oracle::rmssd(rr)).epsilon(1e-12));
        CHECK(f[kSdsd] == Approx(oracle::sdsd(rr)).epsilon(1e-12));
        CHECK(f[kPnn50] == Approx(oracle::pnn(rr, 50.0)).epsilon(1e-12));
        CHECK(f[kPnn20] == Approx(oracle::pnn(rr, 20.0)).epsilon(1e-12));
        CHECK(f[kCvnn] ==
              Approx(oracle::sdnn(rr) / oracle::mean(rr)).epsilon(1e-12));
        CHECK(f[kMedianNn] ==
              Approx(oracle::percentile(rr, 50.0)).epsilon(1e-12));
        CHECK(f[kIqrNn] == Approx(oracle::percentile(rr, 75.0) -
                                  oracle::percentile(rr, 25.0)).epsilon(1e-12));
    }
}

TEST_CASE("heart-rate extrema invert interval extrema") {
    std::vector<double> rr{600, 1000, 800, 750};
    auto f = hrv::hrv30(rr);
    CHECK(f[kMinHr] == Approx(60.0));   // slowest beat, 1000 ms
    CHECK(f[kMaxHr] == Approx(100.0));  // fastest beat, 600 ms
    // Mean HR averages per-beat rates, not 60000 / mean interval.
    CHECK(f[kMeanHr] == Approx((100.0 + 60.0 + 75.0 + 80.0) / 4.0));
}

TEST_CASE("poincare identities") {
    fatigue::Rng rng(31);
    auto rr = noisy_rr(rng, 400, 820.0, 35.0);
    auto f = hrv::hrv30(rr);
    // SD1 = SDSD / sqrt(2); SD2^2 = 2 SDNN^2 - SD1^2 (sample variants
    // agree to rounding at this length).
    CHECK(f[kSd1] == Approx(f[kSdsd] / std::sqrt(2.0)).epsilon(1e-6));
    CHECK(f[kSd1Sd2] == Approx(f[kSd1] / f[kSd2]).epsilon(1e-12));
    CHECK(f[kEllipse] ==
          Approx(std::acos(-1.0) * f[kSd1] * f[kSd2]).epsilon(1e-12));

    // White jitter leaves SD1 and SD2 comparable; a slow drift inflates
    // the long axis far beyond the beat-to-beat spread.
    std::vector<double> drift(400);
    for (std::size_t i = 0; i < drift.size(); ++i)
        drift[i] = 820.0 +
                   90.0 * std::sin(2.0 * std::acos(-1.0) *
                                   static_cast<double>(i) / 120.0) +
                   rng.normal(0.0, 4.0);
    auto g = hrv::hrv30(drift);
    CHECK(g[kSd2] > 2.0 * g[kSd1]);
}

TEST_CASE("frequency powers are nonnegative and add up") {
    fatigue::Rng rng(55);
    auto rr = noisy_rr(rng, 500, 850.0, 30.0);
    auto f = hrv::hrv30(rr);
    CHECK(f[kVlf] >= 0.0);
    CHECK(f[kLf] >= 0.0);
    CHECK(f[kHf] >= 0.0);
    CHECK(f[kTotal] == Approx(f[kVlf] + f[kLf] + f[kHf]).epsilon(1e-12));
    CHECK(f[kLfNorm] == Approx(f[kLf] / (f[kLf] + f[kHf])).epsilon(1e-12));
    CHECK(f[kHfNorm] == Approx(f[kHf] / (f[kLf] + f[kHf])).epsilon(1e-12));
    CHECK(f[kLfNorm] + f[kHfNorm] == Approx(1.0).epsilon(1e-12));
    CHECK(f[kLfHf] == Approx(f[kLf] / f[kHf]).epsilon(1e-12));
    CHECK(f[kHfPeak] >= 0.15);
    CHECK(f[kHfPeak] <= 0.4);
}

TEST_CASE("a pure LF oscillation lands in the LF band") {
    // 0.1 Hz modulation of the tachogram.
    std::vector<double> rr;
    double t = 0.0;
    while (rr.size() < 600) {
        double interval = 800.0 + 60.0 * std::sin(2.0 * std::acos(-1.0) * 0.1 * t);
        rr.push_back(interval);
        t += interval / 1000.0;
    }
    auto f = hrv::hrv30(rr);
    CHECK(f[kLf] > f[kHf] * 5.0);
    CHECK(f[kLf] > f[kVlf]);
    CHECK(f[kLfNorm] > 0.8);
}

TEST_CASE("welch psd recovers total variance roughly") {
    fatigue::Rng rng(91);
    std::vector<double> signal(1024);
    for (auto& s : signal) s = rng.normal(0.0, 1.0);
    auto psd = hrv::welch_psd(signal, 4.0);
    REQUIRE(!psd.freq.empty());
    // Integrate the density; Hann windowing keeps this near the variance.
    double df = psd.freq[1] - psd.freq[0];
    double total = 0.0;
    for (double p : psd.power) total += p * df;
    CHECK(total == Approx(1.0).epsilon(0.25));
}

TEST_CASE("band_power uses half-open intervals from above") {
    hrv::Psd psd;
    psd.freq = {0.0, 0.1, 0.2, 0.3};
    psd.power = {1.0, 2.0, 4.0, 8.0};
    // df = 0.1; (0.05, 0.2] picks bins 0.1 and 0.2.
    CHECK(hrv::band_power(psd, 0.05, 0.2) == Approx(0.6));
    CHECK(hrv::band_power(psd, 0.2, 0.3) == Approx(0.8));
    CHECK(hrv::band_power(psd, 0.5, 1.0) == 0.0);
}

TEST_CASE("entropies match the direct-definition oracle") {
    fatigue::Rng rng(404);
    for (int trial = 0; trial < 30; ++trial) {
        auto xs = noisy_rr(rng, 40 + rng.bounded(160), 800.0, 50.0);
        double r = 0.2 * fatigue::stats::sample_std(xs);
        auto e = hrv::entropies_m2(xs, r);
        double want_s = oracle::sampen(xs, r);
        double want_a = oracle::apen(xs, r);
        if (std::isnan(want_s)) {
            CHECK(std::isnan(e.sampen));
        } else {
            CHECK(e.sampen == Approx(want_s).epsilon(1e-12));
        }
        CHECK(e.apen == Approx(want_a).epsilon(1e-12));
    }
}

TEST_CASE("regular series is more predictable than shuffled noise") {
    std::vector<double> regular;
    for (int i = 0; i < 200; ++i)
        regular.push_back(800.0 + 30.0 * std::sin(0.5 * i));
    auto er = hrv::entropies_m2(regular, 0.2 * fatigue::stats::sample_std(regular));

    fatigue::Rng rng(8);
    auto noise = regular;
    rng.shuffle(noise);
    auto en = hrv::entropies_m2(noise, 0.2 * fatigue::stats::sample_std(noise));
    CHECK(er.sampen < en.sampen);
    CHECK(er.apen < en.apen);
}

TEST_CASE("dfa needs 32 points and sits near the expected exponents") {
    std::vector<double> shortish(31, 800.0);
    CHECK(std::isnan(hrv::dfa_alpha1(shortish)));

    fatigue::Rng rng(66);
    std::vector<double> white(4096);
    for (auto& v : white) v = rng.normal(0.0, 1.0);
    double a_white = hrv::dfa_alpha1(white);
    CHECK(a_white > 0.35);
    CHECK(a_white < 0.75);

    // A random walk integrates white noise; alpha should rise well above 1.
    std::vector<double> walk(4096);
    double acc = 0.0;
    for (auto& v : walk) { acc += rng.normal(0.0, 1.0); v = acc; }
    double a_walk = hrv::dfa_alpha1(walk);
    CHECK(a_walk > 1.2);
}

TEST_CASE("triangular index matches a histogram count") {
    // 7.8125 ms bins; place 6 values in one bin, 2 in another.
    std::vector<double> rr{800.0, 800.1, 800.2, 801.0, 802.0, 803.0,
                           900.0, 900.5};
    CHECK(hrv::triangular_index(rr) == Approx(8.0 / 6.0));
    std::vector<double> uniform(64, 750.0);
    CHECK(hrv::triangular_index(uniform) == Approx(1.0));
}

TEST_CASE("resample_tachogram interpolates between beats") {
    std::vector<double> rr{1000.0, 1000.0, 1000.0, 1000.0};
    auto tach = hrv::resample_tachogram(rr, 4.0);
    REQUIRE(!tach.empty());
    for (double v : tach) CHECK(v == Approx(1000.0));

    std::vector<double> one{800.0};
    CHECK(hrv::resample_tachogram(one, 4.0).empty());
}

TEST_CASE("hrv30 ignores where the window sits in time") {
    fatigue::Rng rng(2021);
    auto rr = noisy_rr(rng, 350, 830.0, 45.0);
    auto a = hrv::hrv30(rr);
    auto b = hrv::hrv30(rr);  // same input, same output, bitwise
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::isnan(a[i])) {
            CHECK(std::isnan(b[i]));
        } else {
            CHECK(a[i] == b[i]);
        }
    }
}

TEST_CASE("names cover all thirty features") {
    const auto& names = hrv::hrv_feature_names();
    CHECK(names.size() == hrv::kHrvFeatureCount);
    CHECK(names[kMeanNn] == "mean_nn");
    CHECK(names[kRmssd] == "rmssd");
    CHECK(names[kHfPeak] == "hf_peak_freq");
    CHECK(names[kTri] == "tri_index");
}

}  // TEST_SUITE
