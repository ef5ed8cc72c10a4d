#include "fatigue/hrv.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include "fatigue/stats.hpp"

namespace fatigue::hrv {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Bands in Hz, half-open (lo, hi].
constexpr double kVlfLo = 0.003, kVlfHi = 0.04;
constexpr double kLfLo = 0.04, kLfHi = 0.15;
constexpr double kHfLo = 0.15, kHfHi = 0.4;
constexpr double kResampleHz = 4.0;
constexpr double kTriBinMs = 7.8125;

// In-place iterative radix-2 FFT; n must be a power of two.
void fft_pow2(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const auto u = a[i + k];
                const auto v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

std::size_t floor_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p * 2 <= n) p *= 2;
    return p;
}

}  // namespace

const std::array<std::string, kHrvFeatureCount>& hrv_feature_names() {
    static const std::array<std::string, kHrvFeatureCount> names = {
        "mean_nn",  "sdnn",      "rmssd",      "sdsd",     "pnn50",
        "pnn20",    "cvnn",      "cvsd",       "median_nn", "mad_nn",
        "iqr_nn",   "mean_hr",   "min_hr",     "max_hr",   "vlf_power",
        "lf_power", "hf_power",  "total_power", "lf_norm", "hf_norm",
        "lf_hf",    "hf_peak_freq", "sd1",     "sd2",      "sd1_sd2",
        "ellipse_area", "sampen", "apen",      "dfa_alpha1", "tri_index"};
    return names;
}

std::vector<double> resample_tachogram(std::span<const double> rr_ms, double fs_hz) {
    const std::size_t n = rr_ms.size();
    if (n < 2 || fs_hz <= 0.0) return {};

    // Beat k sits at the cumulative interval sum, in seconds.
    std::vector<double> t(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += rr_ms[i] / 1000.0;
        t[i] = acc;
    }

    const double t0 = t.front();
    const double t1 = t.back();
    const auto count = static_cast<std::size_t>(std::floor((t1 - t0) * fs_hz)) + 1;
    std::vector<double> out(count);
    std::size_t k = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const double ti = t0 + static_cast<double>(i) / fs_hz;
        while (k + 1 < n && t[k + 1] < ti) ++k;
        if (k + 1 >= n) {
            out[i] = rr_ms[n - 1];
            continue;
        }
        const double span = t[k + 1] - t[k];
        const double frac = span > 0.0 ? (ti - t[k]) / span : 0.0;
        out[i] = rr_ms[k] + frac * (rr_ms[k + 1] - rr_ms[k]);
    }
    return out;
}

Psd welch_psd(std::span<const double> signal, double fs_hz, std::size_t nperseg) {
    Psd psd;
    const std::size_t n = signal.size();
    if (n < 8 || fs_hz <= 0.0) return psd;

    const std::size_t seg = floor_pow2(std::min(nperseg, n));
    const std::size_t step = seg / 2;
    const std::size_t nseg = 1 + (n - seg) / step;

    std::vector<double> window(seg);
    double u = 0.0;
    for (std::size_t i = 0; i < seg; ++i) {
        window[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi *
                                          static_cast<double>(i) /
                                          static_cast<double>(seg)));
        u += window[i] * window[i];
    }

    const std::size_t half = seg / 2;
    std::vector<double> accum(half + 1, 0.0);
    std::vector<std::complex<double>> buf(seg);
    for (std::size_t s = 0; s < nseg; ++s) {
        const double* block = signal.data() + s * step;
        double m = 0.0;
        for (std::size_t i = 0; i < seg; ++i) m += block[i];
        m /= static_cast<double>(seg);
        for (std::size_t i = 0; i < seg; ++i)
            buf[i] = {(block[i] - m) * window[i], 0.0};
        fft_pow2(buf);
        for (std::size_t k = 0; k <= half; ++k) accum[k] += std::norm(buf[k]);
    }

    const double scale = 1.0 / (fs_hz * u * static_cast<double>(nseg));
    psd.freq.resize(half + 1);
    psd.power.resize(half + 1);
    for (std::size_t k = 0; k <= half; ++k) {
        psd.freq[k] = static_cast<double>(k) * fs_hz / static_cast<double>(seg);
        double p = accum[k] * scale;
        if (k != 0 && k != half) p *= 2.0;  // one-sided spectrum
        psd.power[k] = p;
    }
    return psd;
}

double band_power(const Psd& psd, double lo_hz, double hi_hz) {
    if (psd.freq.size() < 2) return kNaN;
    const double df = psd.freq[1] - psd.freq[0];
    double sum = 0.0;
    for (std::size_t k = 0; k < psd.freq.size(); ++k)
        if (psd.freq[k] > lo_hz && psd.freq[k] <= hi_hz) sum += psd.power[k] * df;
    return sum;
}

EntropyPair entropies_m2(std::span<const double> xs, double r) {
    const std::size_t n = xs.size();
    if (n < 4 || r < 0.0) return {kNaN, kNaN};

    // Template index bounds: length-2 templates start at 0..n-2,
    // length-3 at 0..n-3. Sampen restricts both counts to 0..n-3 so the
    // m and m+1 template sets pair up; apen uses the full ranges with
    // self-matches included.
    const std::size_t last2 = n - 2;  // inclusive
    const std::size_t last3 = n - 3;  // inclusive

    std::vector<int> cnt2(last2 + 1, 0), cnt3(last3 + 1, 0);
    long long pairs2 = 0, pairs3 = 0;

    const double* x = xs.data();
    for (std::size_t i = 0; i <= last2; ++i) {
        const double xi0 = x[i], xi1 = x[i + 1];
        for (std::size_t j = i + 1; j <= last2; ++j) {
            if (std::abs(xi0 - x[j]) > r) continue;
            if (std::abs(xi1 - x[j + 1]) > r) continue;
            ++cnt2[i];
            ++cnt2[j];
            const bool in3 = i <= last3 && j <= last3;
            if (in3) ++pairs2;
            if (in3 && std::abs(x[i + 2] - x[j + 2]) <= r) {
                ++pairs3;
                ++cnt3[i];
                ++cnt3[j];
            }
        }
    }

    EntropyPair out{kNaN, kNaN};
    if (pairs2 > 0 && pairs3 > 0)
        out.sampen = -std::log(static_cast<double>(pairs3) /
                               static_cast<double>(pairs2));

    // Approximate entropy: C_i includes the self-match, so the logs are
    // always defined.
    const double n2 = static_cast<double>(last2 + 1);
    const double n3 = static_cast<double>(last3 + 1);
    double phi2 = 0.0, phi3 = 0.0;
    for (std::size_t i = 0; i <= last2; ++i)
        phi2 += std::log((cnt2[i] + 1.0) / n2);
    for (std::size_t i = 0; i <= last3; ++i)
        phi3 += std::log((cnt3[i] + 1.0) / n3);
    out.apen = phi2 / n2 - phi3 / n3;
    return out;
}

double dfa_alpha1(std::span<const double> xs) {
    const std::size_t n = xs.size();
    if (n < 32) return kNaN;

    std::vector<double> profile(n);
    const double m = stats::mean(xs);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += xs[i] - m;
        profile[i] = acc;
    }

    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int used = 0;
    for (std::size_t scale = 4; scale <= 16; ++scale) {
        const std::size_t boxes = n / scale;
        double ss = 0.0;
        for (std::size_t b = 0; b < boxes; ++b) {
            const double* y = profile.data() + b * scale;
            // Least-squares line over t = 0..scale-1.
            const double s = static_cast<double>(scale);
            const double tm = (s - 1.0) / 2.0;
            double ym = 0.0;
            for (std::size_t k = 0; k < scale; ++k) ym += y[k];
            ym /= s;
            double stt = 0.0, sty = 0.0;
            for (std::size_t k = 0; k < scale; ++k) {
                const double dt = static_cast<double>(k) - tm;
                stt += dt * dt;
                sty += dt * (y[k] - ym);
            }
            const double slope = sty / stt;
            for (std::size_t k = 0; k < scale; ++k) {
                const double fit = ym + slope * (static_cast<double>(k) - tm);
                const double e = y[k] - fit;
                ss += e * e;
            }
        }
        const double fluct =
            std::sqrt(ss / (static_cast<double>(boxes) * static_cast<double>(scale)));
        if (fluct <= 0.0) return kNaN;
        const double lx = std::log(static_cast<double>(scale));
        const double ly = std::log(fluct);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++used;
    }
    const double denom = static_cast<double>(used) * sxx - sx * sx;
    if (denom == 0.0) return kNaN;
    return (static_cast<double>(used) * sxy - sx * sy) / denom;
}

double triangular_index(std::span<const double> rr_ms) {
    if (rr_ms.empty()) return kNaN;
    long long lo = std::numeric_limits<long long>::max();
    long long hi = std::numeric_limits<long long>::min();
    for (double v : rr_ms) {
        const long long b = static_cast<long long>(std::floor(v / kTriBinMs));
        lo = std::min(lo, b);
        hi = std::max(hi, b);
    }
    std::vector<int> counts(static_cast<std::size_t>(hi - lo + 1), 0);
    for (double v : rr_ms)
        ++counts[static_cast<std::size_t>(
            static_cast<long long>(std::floor(v / kTriBinMs)) - lo)];
    const int peak = *std::max_element(counts.begin(), counts.end());
    return static_cast<double>(rr_ms.size()) / static_cast<double>(peak);
}

std::array<double, kHrvFeatureCount> hrv30(std::span<const double> rr_ms) {
    std::array<double, kHrvFeatureCount> f;
    f.fill(kNaN);
    const std::size_t n = rr_ms.size();
    if (n == 0) return f;

    std::vector<double> sorted(rr_ms.begin(), rr_ms.end());
    std::sort(sorted.begin(), sorted.end());
    const double mean_nn = stats::mean(rr_ms);
    const double sdnn = stats::sample_std(rr_ms);
    const double median_nn = stats::percentile_sorted(sorted, 50.0);

    f[0] = mean_nn;
    f[1] = sdnn;
    f[8] = median_nn;
    f[10] = stats::percentile_sorted(sorted, 75.0) -
            stats::percentile_sorted(sorted, 25.0);

    // Median absolute deviation around the median, unscaled.
    {
        std::vector<double> dev(n);
        for (std::size_t i = 0; i < n; ++i) dev[i] = std::abs(rr_ms[i] - median_nn);
        f[9] = stats::percentile(dev, 50.0);
    }

    if (n >= 2) {
        std::vector<double> diffs(n - 1);
        double ssd = 0.0;
        int over50 = 0, over20 = 0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double d = rr_ms[i + 1] - rr_ms[i];
            diffs[i] = d;
            ssd += d * d;
            if (std::abs(d) > 50.0) ++over50;
            if (std::abs(d) > 20.0) ++over20;
        }
        const double rmssd = std::sqrt(ssd / static_cast<double>(n - 1));
        const double sdsd = stats::sample_std(diffs);
        f[2] = rmssd;
        f[3] = sdsd;
        f[4] = static_cast<double>(over50) / static_cast<double>(n - 1);
        f[5] = static_cast<double>(over20) / static_cast<double>(n - 1);
        if (mean_nn != 0.0) {
            f[6] = sdnn / mean_nn;
            f[7] = rmssd / mean_nn;
        }

        // Poincare descriptors via the variance identities.
        const double sd1 = sdsd / std::numbers::sqrt2;
        const double sd2sq = 2.0 * sdnn * sdnn - 0.5 * sdsd * sdsd;
        const double sd2 = std::sqrt(std::max(sd2sq, 0.0));
        f[22] = sd1;
        f[23] = sd2;
        if (sd2 > 0.0) f[24] = sd1 / sd2;
        f[25] = std::numbers::pi * sd1 * sd2;
    }

    {
        double hr_sum = 0.0;
        double hr_min = std::numeric_limits<double>::infinity();
        double hr_max = -std::numeric_limits<double>::infinity();
        for (double v : rr_ms) {
            const double hr = 60000.0 / v;
            hr_sum += hr;
            hr_min = std::min(hr_min, hr);
            hr_max = std::max(hr_max, hr);
        }
        f[11] = hr_sum / static_cast<double>(n);
        f[12] = hr_min;
        f[13] = hr_max;
    }

    const auto resampled = resample_tachogram(rr_ms, kResampleHz);
    const Psd psd = welch_psd(resampled, kResampleHz);
    if (!psd.power.empty()) {
        const double vlf = band_power(psd, kVlfLo, kVlfHi);
        const double lf = band_power(psd, kLfLo, kLfHi);
        const double hf = band_power(psd, kHfLo, kHfHi);
        f[14] = vlf;
        f[15] = lf;
        f[16] = hf;
        f[17] = vlf + lf + hf;
        if (lf + hf > 0.0) {
            f[18] = lf / (lf + hf);
            f[19] = hf / (lf + hf);
        }
        if (hf > 0.0) f[20] = lf / hf;
        double peak_f = kNaN, peak_p = -1.0;
        for (std::size_t k = 0; k < psd.freq.size(); ++k) {
            if (psd.freq[k] > kHfLo && psd.freq[k] <= kHfHi &&
                psd.power[k] > peak_p) {
                peak_p = psd.power[k];
                peak_f = psd.freq[k];
            }
        }
        f[21] = peak_f;
    }

    const auto ent = entropies_m2(rr_ms, 0.2 * sdnn);
    f[26] = ent.sampen;
    f[27] = ent.apen;
    f[28] = dfa_alpha1(rr_ms);
    f[29] = triangular_index(rr_ms);
    return f;
}

}  // namespace fatigue::hrv
