#include "fatigue/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <nlohmann/json.hpp>

#include "fatigue/csv.hpp"
#include "fatigue/error.hpp"
#include "fatigue/ingest.hpp"
#include "fatigue/rng.hpp"

namespace fatigue::synth {

double friedman1(std::span<const double> x) {
    if (x.size() < 5) throw Error("friedman1 needs five inputs");
    return 10.0 * std::sin(std::numbers::pi * x[0] * x[1]) +
           20.0 * (x[2] - 0.5) * (x[2] - 0.5) + 10.0 * x[3] + 5.0 * x[4];
}

namespace {

double linear_effect(std::span<const double> x) {
    return 10.0 * x[0] + 5.0 * x[1];
}

}  // namespace

ClusteredData gen_clustered(const SynthSpec& spec) {
    if (spec.n_clusters < 1 || spec.points_per_cluster < 1)
        throw Error("gen_clustered: cluster counts must be positive");
    if (spec.sigma_b < 0.0) throw Error("gen_clustered: sigma_b must be >= 0");
    if (!(spec.sigma_e > 0.0)) throw Error("gen_clustered: sigma_e must be > 0");

    Rng rng(spec.seed);
    const std::size_t q = static_cast<std::size_t>(spec.n_clusters);
    const std::size_t n = q * static_cast<std::size_t>(spec.points_per_cluster);

    ClusteredData data;
    data.truth.sigma_b2 = spec.sigma_b * spec.sigma_b;
    data.truth.sigma_e2 = spec.sigma_e * spec.sigma_e;
    data.truth.intercepts.resize(q);
    double b_mean = 0.0;
    for (double& b : data.truth.intercepts) {
        b = spec.sigma_b * rng.normal();
        b_mean += b;
    }
    b_mean /= static_cast<double>(q);
    for (double& b : data.truth.intercepts) b -= b_mean;

    data.X = Matrix(n, 10);
    data.y.resize(n);
    data.clusters.resize(n);
    data.truth.fixed.resize(n);
    std::size_t row = 0;
    for (std::size_t c = 0; c < q; ++c) {
        for (int j = 0; j < spec.points_per_cluster; ++j, ++row) {
            double* x = data.X.row(row);
            for (int d = 0; d < 10; ++d) x[d] = rng.uniform();
            std::span<const double> sig{x, 10};
            double f = spec.fixed == FixedEffect::Friedman1 ? friedman1(sig)
                                                            : linear_effect(sig);
            data.truth.fixed[row] = f;
            data.clusters[row] = static_cast<int>(c);
            data.y[row] = f + data.truth.intercepts[c] + spec.sigma_e * rng.normal();
        }
    }
    return data;
}

void write_clustered(const ClusteredData& data,
                     const std::string& features_path,
                     const std::string& truth_path) {
    csv::Writer out(features_path);
    out.write("cluster,y");
    for (int d = 0; d < 10; ++d) out.write(",x" + std::to_string(d));
    out.write("\n");
    for (std::size_t r = 0; r < data.X.rows(); ++r) {
        out.write_int(data.clusters[r]);
        out.write(",");
        out.write_double(data.y[r]);
        const double* x = data.X.row(r);
        for (std::size_t d = 0; d < data.X.cols(); ++d) {
            out.write(",");
            out.write_double(x[d]);
        }
        out.write("\n");
    }
    out.close();

    nlohmann::json doc = {{"format_version", 1},
                          {"kind", "synth_truth"},
                          {"sigma_b2", data.truth.sigma_b2},
                          {"sigma_e2", data.truth.sigma_e2},
                          {"intercepts", data.truth.intercepts},
                          {"fixed", data.truth.fixed}};
    csv::Writer truth(truth_path);
    truth.write(doc.dump());
    truth.write("\n");
    truth.close();
}

namespace {

constexpr std::int64_t kDayMs = 24LL * 3600 * 1000;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Interval {
    std::int64_t begin = 0;
    std::int64_t end = 0;
};

// Contiguous device-off episodes covering roughly `fraction` of the
// timeline, merged and sorted.
std::vector<Interval> draw_dropouts(Rng& rng, std::int64_t span_ms,
                                    double fraction) {
    std::vector<Interval> merged;
    if (fraction <= 0.0) return merged;
    const double target = fraction * static_cast<double>(span_ms);
    std::vector<Interval> raw;
    double covered = 0.0;
    for (int guard = 0; covered < target && guard < 1000; ++guard) {
        std::int64_t start =
            static_cast<std::int64_t>(rng.uniform() * static_cast<double>(span_ms));
        std::int64_t dur = 3600'000 +
            static_cast<std::int64_t>(rng.uniform() * (7.0 * 3600'000));
        raw.push_back({start, std::min(start + dur, span_ms)});
        std::sort(raw.begin(), raw.end(),
                  [](const Interval& a, const Interval& b) { return a.begin < b.begin; });
        merged.clear();
        for (const Interval& iv : raw) {
            if (!merged.empty() && iv.begin <= merged.back().end)
                merged.back().end = std::max(merged.back().end, iv.end);
            else
                merged.push_back(iv);
        }
        covered = 0.0;
        for (const Interval& iv : merged)
            covered += static_cast<double>(iv.end - iv.begin);
    }
    return merged;
}

// Cursor-based membership test; times must be queried in ascending order.
struct DropoutCursor {
    const std::vector<Interval>* intervals = nullptr;
    std::size_t pos = 0;

    bool covers(std::int64_t t) {
        while (pos < intervals->size() && (*intervals)[pos].end <= t) ++pos;
        return pos < intervals->size() && (*intervals)[pos].begin <= t;
    }
};

// scale = 10^decimals; dividing by the exact power of ten keeps the
// shortest decimal rendering short.
double quantize(double v, double scale) { return std::round(v * scale) / scale; }

double clampd(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

struct SubjectPlan {
    std::string id;
    int age = 0;
    double bmi = 0.0;
    double base_rr = 850.0;
    std::vector<double> state;  // one per 6-hour slot
    std::vector<int> score;
    std::vector<Interval> dropouts;  // relative to the epoch
};

double time_of_day_ms(std::int64_t t) {
    return static_cast<double>((t - kSynthEpochMs) % kDayMs);
}

double circadian(std::int64_t t, double peak_hour) {
    double phase = kTwoPi * (time_of_day_ms(t) / kDayMs - peak_hour / 24.0);
    return std::cos(phase);
}

}  // namespace

StreamsSummary gen_streams(const StreamsSpec& spec, const std::string& out_dir) {
    if (spec.n_subjects < 1 || spec.days < 1)
        throw Error("gen_streams: subjects and days must be positive");
    if (spec.missingness < 0.0 || spec.missingness >= 1.0)
        throw Error("gen_streams: missingness must be in [0, 1)");
    if (!(spec.accel_hz > 0.0) || !(spec.temp_hz > 0.0) || !(spec.resp_hz > 0.0))
        throw Error("gen_streams: rates must be positive");

    Rng rng(spec.seed);
    const std::int64_t span = spec.days * kDayMs;
    const int slots = spec.days * 4;
    // Fatigue is lowest in the morning and peaks in the evening.
    const double slot_adjust[4] = {-0.3, -0.8, 0.2, 0.9};

    std::vector<SubjectPlan> plans(static_cast<std::size_t>(spec.n_subjects));
    const int id_width = spec.n_subjects >= 100 ? 3 : 2;
    for (int s = 0; s < spec.n_subjects; ++s) {
        SubjectPlan& plan = plans[static_cast<std::size_t>(s)];
        char buf[16];
        std::snprintf(buf, sizeof buf, "S%0*d", id_width, s + 1);
        plan.id = buf;
        plan.age = 22 + static_cast<int>(rng.uniform() * 56.0);
        plan.bmi = quantize(19.0 + rng.uniform() * 16.0, 10.0);
        plan.base_rr = 750.0 + rng.uniform() * 200.0;
        double level = 2.5 + rng.uniform() * 4.0;  // subject's resting fatigue
        double state = level + rng.normal();
        plan.state.resize(static_cast<std::size_t>(slots));
        plan.score.resize(static_cast<std::size_t>(slots));
        for (int t = 0; t < slots; ++t) {
            state = 0.85 * (state - level) + level + rng.normal();
            double used = clampd(state + slot_adjust[t % 4], 0.0, 10.0);
            plan.state[static_cast<std::size_t>(t)] = used;
            plan.score[static_cast<std::size_t>(t)] =
                static_cast<int>(std::llround(clampd(used + 0.5 * rng.normal(), 0.0, 10.0)));
        }
        plan.dropouts = draw_dropouts(rng, span, spec.missingness);
    }

    auto state_at = [&](const SubjectPlan& plan, std::int64_t t) {
        auto idx = static_cast<std::size_t>(
            std::clamp<std::int64_t>((t - kSynthEpochMs) / ingest::kSlotMs, 0, slots - 1));
        return plan.state[idx];
    };

    StreamsSummary summary;
    summary.rr_per_s = 1.2;

    csv::Writer subjects(out_dir + "/subjects.csv");
    subjects.write("subject_id,age,bmi\n");
    for (const auto& plan : plans) {
        subjects.write(plan.id);
        subjects.write(",");
        subjects.write_int(plan.age);
        subjects.write(",");
        subjects.write_double(plan.bmi);
        subjects.write("\n");
    }
    subjects.close();

    csv::Writer labels(out_dir + "/labels.csv");
    labels.write("subject_id,slot_start_ms,score\n");
    for (const auto& plan : plans) {
        for (int t = 0; t < slots; ++t) {
            labels.write(plan.id);
            labels.write(",");
            labels.write_int(kSynthEpochMs + t * ingest::kSlotMs);
            labels.write(",");
            labels.write_int(plan.score[static_cast<std::size_t>(t)]);
            labels.write("\n");
            ++summary.n_labels;
        }
    }
    labels.close();

    csv::Writer rr(out_dir + "/rr.csv");
    csv::Writer accel(out_dir + "/accel.csv");
    csv::Writer temp(out_dir + "/temp.csv");
    csv::Writer resp(out_dir + "/resp.csv");
    rr.write("subject_id,timestamp_ms,value\n");
    accel.write("subject_id,timestamp_ms,x,y,z\n");
    temp.write("subject_id,timestamp_ms,value\n");
    resp.write("subject_id,timestamp_ms,value\n");

    const auto accel_step = static_cast<std::int64_t>(std::llround(1000.0 / spec.accel_hz));
    const auto temp_step = static_cast<std::int64_t>(std::llround(1000.0 / spec.temp_hz));
    const auto resp_step = static_cast<std::int64_t>(std::llround(1000.0 / spec.resp_hz));
    const std::int64_t end = kSynthEpochMs + span;

    for (const auto& plan : plans) {
        std::vector<Interval> abs_drop = plan.dropouts;
        for (Interval& iv : abs_drop) {
            iv.begin += kSynthEpochMs;
            iv.end += kSynthEpochMs;
        }

        // Beat-to-beat RR; each beat is stamped at its arrival time.
        DropoutCursor drop{&abs_drop};
        std::int64_t t = kSynthEpochMs;
        while (true) {
            double state = state_at(plan, t);
            double rr_ms = plan.base_rr + 50.0 * circadian(t, 4.0) -
                           12.0 * state + 20.0 * rng.normal();
            auto rr_int = static_cast<std::int64_t>(
                std::llround(clampd(rr_ms, 300.0, 2500.0)));
            t += rr_int;
            if (t >= end) break;
            if (drop.covers(t)) continue;
            rr.write(plan.id);
            rr.write(",");
            rr.write_int(t);
            rr.write(",");
            rr.write_int(rr_int);
            rr.write("\n");
            ++summary.rows[index_of(Modality::RR)];
        }

        // Accelerometer around 1 g with daytime activity and bursts.
        drop = {&abs_drop, 0};
        std::int64_t burst_until = 0;
        for (t = kSynthEpochMs; t < end; t += accel_step) {
            double tod = time_of_day_ms(t);
            double day_factor = (tod >= 8.0 * 3600'000 && tod < 22.0 * 3600'000) ? 1.0 : 0.15;
            if (t >= burst_until && rng.uniform() < 0.002 * day_factor)
                burst_until = t + 30'000 +
                    static_cast<std::int64_t>(rng.uniform() * 90'000);
            double amp = 0.012 +
                0.1 * day_factor * (1.0 - state_at(plan, t) / 14.0);
            if (t < burst_until) amp *= 5.0;
            double ax = quantize(amp * rng.normal(), 1000.0);
            double ay = quantize(amp * rng.normal(), 1000.0);
            double az = quantize(1.0 + amp * rng.normal(), 1000.0);
            if (drop.covers(t)) continue;
            accel.write(plan.id);
            accel.write(",");
            accel.write_int(t);
            accel.write(",");
            accel.write_double(ax);
            accel.write(",");
            accel.write_double(ay);
            accel.write(",");
            accel.write_double(az);
            accel.write("\n");
            ++summary.rows[index_of(Modality::ACCEL)];
        }

        drop = {&abs_drop, 0};
        for (t = kSynthEpochMs; t < end; t += temp_step) {
            double v = quantize(33.0 + 0.6 * circadian(t, 16.0) +
                                    0.04 * state_at(plan, t) + 0.08 * rng.normal(),
                                100.0);
            if (drop.covers(t)) continue;
            temp.write(plan.id);
            temp.write(",");
            temp.write_int(t);
            temp.write(",");
            temp.write_double(v);
            temp.write("\n");
            ++summary.rows[index_of(Modality::TEMP)];
        }

        drop = {&abs_drop, 0};
        for (t = kSynthEpochMs; t < end; t += resp_step) {
            double v = quantize(clampd(15.0 + 2.0 * circadian(t, 14.0) +
                                           0.35 * state_at(plan, t) +
                                           0.6 * rng.normal(),
                                       8.0, 25.0),
                                100.0);
            if (drop.covers(t)) continue;
            resp.write(plan.id);
            resp.write(",");
            resp.write_int(t);
            resp.write(",");
            resp.write_double(v);
            resp.write("\n");
            ++summary.rows[index_of(Modality::RESP)];
        }
    }

    rr.close();
    accel.close();
    temp.close();
    resp.close();
    return summary;
}

}  // namespace fatigue::synth
