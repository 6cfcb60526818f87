#include "spinshot/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <istream>
#include <ostream>
#include <thread>

namespace spinshot {

namespace {

std::uint64_t g_memory_budget = 2ULL << 30;

struct EngineParams {
    double emission_rate = 0.0;
    double emission_mean = kInfinity;   // 1 / emission_rate
    double leak_mean = kInfinity;       // 1 / leakage_rate
    double eta = 0.0;
    double backaction_prob = 0.0;       // per-emission bright -> dark flip
    double tau_on = kInfinity;          // mean bright dwell (co-tunneling)
    double tau_off = kInfinity;         // mean dark dwell
    double rise_time = 0.0;
    double dead_time = 0.0;
};

EngineParams engine_params(const ReadoutScenario& s) {
    EngineParams p;
    p.emission_rate = s.emission_rate();
    p.emission_mean = p.emission_rate > 0.0 ? 1.0 / p.emission_rate : kInfinity;
    const double leak = s.leakage_rate();
    p.leak_mean = leak > 0.0 ? 1.0 / leak : kInfinity;
    p.eta = s.overall_efficiency;
    p.backaction_prob = s.branching_ratio < kInfinity ? 1.0 / (s.branching_ratio + 1.0) : 0.0;
    p.tau_on = s.flip_time_to_dark();
    p.tau_off = s.flip_time_to_bright();
    p.rise_time = s.rise_time;
    p.dead_time = s.detector_dead_time;
    return p;
}

double flip_mean(const EngineParams& p, Spin spin) {
    return spin == Spin::bright ? p.tau_on : p.tau_off;
}

struct Click {
    double t;
    ClickSource source;
};

/// Drive on over [t0, t1]. Emission and leakage are active; co-tunneling
/// runs throughout. Clicks respect dead_until; the trajectory continues
/// after a click so the ground truth stays valid.
Spin run_driven_window(const EngineParams& p, StreamRng& rng, double t0, double t1, Spin spin,
                       double& dead_until, std::vector<Click>* clicks,
                       std::vector<double>* flips) {
    double next_flip = t0 + rng.next_exponential(flip_mean(p, spin));
    double next_emit = spin == Spin::bright ? t0 + rng.next_exponential(p.emission_mean) : kInfinity;
    double next_leak = t0 + rng.next_exponential(p.leak_mean);

    auto toggle = [&](double t) {
        spin = flipped(spin);
        if (flips) flips->push_back(t);
        next_flip = t + rng.next_exponential(flip_mean(p, spin));
        next_emit = spin == Spin::bright ? t + rng.next_exponential(p.emission_mean) : kInfinity;
    };

    while (true) {
        const double t = std::min({next_flip, next_emit, next_leak});
        if (!(t < t1)) break;
        if (t == next_flip) {
            toggle(t);
        } else if (t == next_emit) {
            // Thinned to the drive turn-on shape when a rise time is set.
            const bool accepted =
                p.rise_time <= 0.0 || rng.next_bernoulli(-std::expm1(-(t - t0) / p.rise_time));
            bool flip_now = false;
            if (accepted) {
                // A spin-nonconserving emission leaves through the diagonal
                // transition, off the cavity-enhanced readout mode, so it
                // cannot produce a click.
                flip_now = rng.next_bernoulli(p.backaction_prob);
                if (!flip_now && rng.next_bernoulli(p.eta) && t >= dead_until && clicks) {
                    clicks->push_back({t, ClickSource::emitter});
                    dead_until = t + p.dead_time;
                }
            }
            next_emit = t + rng.next_exponential(p.emission_mean);
            if (flip_now) toggle(t);
        } else {
            if (t >= dead_until && clicks) {
                clicks->push_back({t, ClickSource::leakage});
                dead_until = t + p.dead_time;
            }
            next_leak = t + rng.next_exponential(p.leak_mean);
        }
    }
    return spin;
}

/// Drive off: co-tunneling only.
Spin run_free(const EngineParams& p, StreamRng& rng, double duration, Spin spin) {
    double remaining = duration;
    while (remaining > 0.0) {
        const double wait = rng.next_exponential(flip_mean(p, spin));
        if (!(wait < remaining)) break;
        remaining -= wait;
        spin = flipped(spin);
    }
    return spin;
}

Spin draw_initial_spin(const ReadoutScenario& s, StreamRng& rng) {
    return rng.next_bernoulli(s.p_bright) ? Spin::bright : Spin::dark;
}

DetectionRecord record_from_window(std::uint64_t index, Spin initial,
                                   const std::vector<Click>& clicks,
                                   std::vector<double>&& flips) {
    DetectionRecord rec;
    rec.repetition_index = index;
    rec.true_initial_spin = initial;
    if (!clicks.empty()) {
        rec.detection_time = clicks.front().t;
        rec.source = clicks.front().source;
    }
    rec.spin_flip_times = std::move(flips);
    return rec;
}

void parallel_for(std::uint64_t n, int threads, const std::function<void(std::uint64_t)>& body) {
    unsigned int worker_count = threads > 0 ? static_cast<unsigned int>(threads)
                                            : std::thread::hardware_concurrency();
    if (worker_count <= 1 || n < 2) {
        for (std::uint64_t i = 0; i < n; ++i) body(i);
        return;
    }
    worker_count = std::min<unsigned int>(worker_count, 64);
    std::atomic<std::uint64_t> next{0};
    constexpr std::uint64_t kChunk = 1024;
    auto worker = [&] {
        while (true) {
            const std::uint64_t begin = next.fetch_add(kChunk);
            if (begin >= n) return;
            const std::uint64_t end = std::min(begin + kChunk, n);
            for (std::uint64_t i = begin; i < end; ++i) body(i);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(worker_count);
    for (unsigned int w = 0; w < worker_count; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

}  // namespace

DetectionRecord simulate_repetition(const ReadoutScenario& scenario, StreamRng& rng,
                                    Spin initial_spin) {
    scenario.validate();
    const EngineParams p = engine_params(scenario);
    std::vector<Click> clicks;
    std::vector<double> flips;
    double dead_until = 0.0;
    run_driven_window(p, rng, 0.0, scenario.pulse_duration, initial_spin, dead_until, &clicks,
                      &flips);
    return record_from_window(0, initial_spin, clicks, std::move(flips));
}

std::uint64_t ensemble_memory_estimate(const ReadoutScenario& scenario) {
    const double expected_flips =
        scenario.pulse_duration * (1.0 / scenario.flip_time_to_dark() +
                                   scenario.backaction_flip_rate());
    const double per_record = sizeof(DetectionRecord) + 8.0 * std::max(1.0, 4.0 * expected_flips);
    return static_cast<std::uint64_t>(per_record * static_cast<double>(scenario.n_repetitions));
}

void set_ensemble_memory_budget(std::uint64_t bytes) { g_memory_budget = bytes; }

TraceEnsemble simulate_ensemble(const ReadoutScenario& scenario, std::uint64_t seed,
                                int threads) {
    scenario.validate();
    if (ensemble_memory_estimate(scenario) > g_memory_budget) {
        throw std::runtime_error("ensemble memory estimate exceeds budget");
    }
    const EngineParams p = engine_params(scenario);
    const double gap = scenario.pulse_repetition_time - scenario.pulse_duration;

    TraceEnsemble ensemble;
    ensemble.scenario = scenario;
    ensemble.seed = seed;
    ensemble.records.resize(scenario.n_repetitions);

    parallel_for(scenario.n_repetitions, threads, [&](std::uint64_t k) {
        StreamRng rng(seed, k);
        Spin spin = draw_initial_spin(scenario, rng);
        spin = run_free(p, rng, gap, spin);
        std::vector<Click> clicks;
        std::vector<double> flips;
        double dead_until = 0.0;
        run_driven_window(p, rng, 0.0, scenario.pulse_duration, spin, dead_until, &clicks, &flips);
        ensemble.records[k] = record_from_window(k, spin, clicks, std::move(flips));
    });
    return ensemble;
}

std::vector<TwoPulseOutcome> simulate_two_pulse(const ReadoutScenario& scenario,
                                                double tau_delay, std::uint64_t seed,
                                                bool enforce_dead_time, int threads) {
    scenario.validate();
    if (enforce_dead_time && tau_delay < scenario.detector_dead_time) {
        throw std::domain_error("two-pulse delay below the detector dead time");
    }
    const EngineParams p = engine_params(scenario);
    std::vector<TwoPulseOutcome> outcomes(scenario.n_repetitions);

    parallel_for(scenario.n_repetitions, threads, [&](std::uint64_t k) {
        StreamRng rng(seed, k);
        TwoPulseOutcome& out = outcomes[k];
        Spin spin = draw_initial_spin(scenario, rng);
        out.true_initial_spin = spin;

        std::vector<Click> clicks;
        double dead_until = 0.0;
        spin = run_driven_window(p, rng, 0.0, scenario.pulse_duration, spin, dead_until, &clicks,
                                 nullptr);
        out.click1 = !clicks.empty();

        spin = run_free(p, rng, tau_delay, spin);
        out.spin_at_second_pulse = spin;

        clicks.clear();
        dead_until = 0.0;
        run_driven_window(p, rng, 0.0, scenario.pulse_duration, spin, dead_until, &clicks,
                          nullptr);
        out.click2 = !clicks.empty();
    });
    return outcomes;
}

PulseTrainResult simulate_pulse_train(const ReadoutScenario& scenario, std::uint64_t n_pulses,
                                      std::uint64_t seed) {
    scenario.validate();
    const EngineParams p = engine_params(scenario);
    const double period = scenario.pulse_repetition_time;
    const double width = scenario.pulse_duration;

    PulseTrainResult result;
    result.pulse_duration = width;
    result.pulse_period = period;
    result.clicks.resize(n_pulses);
    result.spin_at_start.resize(n_pulses);

    StreamRng rng(seed, 0);
    Spin spin = draw_initial_spin(scenario, rng);
    double dead_until = 0.0;
    std::vector<Click> clicks;
    for (std::uint64_t k = 0; k < n_pulses; ++k) {
        const double start = static_cast<double>(k) * period;
        result.spin_at_start[k] = static_cast<std::uint8_t>(spin);
        clicks.clear();
        spin = run_driven_window(p, rng, start, start + width, spin, dead_until, &clicks, nullptr);
        result.clicks[k] = clicks.empty() ? 0 : 1;
        spin = run_free(p, rng, period - width, spin);
    }
    return result;
}

std::vector<double> simulate_cw_stream(const ReadoutScenario& scenario, double duration_ns,
                                       std::uint64_t seed) {
    scenario.validate();
    const EngineParams p = engine_params(scenario);
    StreamRng rng(seed, 0);
    Spin spin = draw_initial_spin(scenario, rng);
    double dead_until = 0.0;
    std::vector<Click> clicks;
    run_driven_window(p, rng, 0.0, duration_ns, spin, dead_until, &clicks, nullptr);
    std::vector<double> times;
    times.reserve(clicks.size());
    for (const Click& c : clicks) times.push_back(c.t);
    return times;
}

void write_ensemble_csv(const TraceEnsemble& ensemble, std::ostream& out) {
    out << "repetition,initial_spin,detection_time_ns,source\n";
    char buffer[64];
    for (const DetectionRecord& rec : ensemble.records) {
        out << rec.repetition_index << ',' << to_string(rec.true_initial_spin) << ',';
        if (rec.detection_time) {
            std::snprintf(buffer, sizeof buffer, "%.9g", *rec.detection_time);
            out << buffer << ',' << to_string(rec.source);
        } else {
            out << ',';
        }
        out << '\n';
    }
}

namespace {

constexpr std::uint64_t kBinaryMagic = 0x544F48534E495053ULL;  // "SPINSHOT"
constexpr std::uint64_t kBinaryVersion = 1;

template <typename T>
void put(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <typename T>
T get(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof value);
    return value;
}

}  // namespace

void write_ensemble_binary(const TraceEnsemble& ensemble, std::ostream& out) {
    put(out, kBinaryMagic);
    put(out, kBinaryVersion);
    put(out, static_cast<std::uint64_t>(ensemble.records.size()));
    for (const DetectionRecord& rec : ensemble.records) {
        put(out, rec.repetition_index);
        put(out, static_cast<std::uint8_t>(rec.true_initial_spin));
        put(out, static_cast<std::uint8_t>(rec.detection_time.has_value()));
        put(out, static_cast<std::uint8_t>(rec.source));
        put(out, std::uint8_t{0});
        put(out, std::uint32_t(rec.spin_flip_times.size()));
        put(out, rec.detection_time.value_or(0.0));
        for (double t : rec.spin_flip_times) put(out, t);
    }
}

std::vector<DetectionRecord> read_ensemble_binary(std::istream& in) {
    if (get<std::uint64_t>(in) != kBinaryMagic) throw std::runtime_error("bad ensemble magic");
    if (get<std::uint64_t>(in) != kBinaryVersion) throw std::runtime_error("bad ensemble version");
    const std::uint64_t count = get<std::uint64_t>(in);
    std::vector<DetectionRecord> records(count);
    for (DetectionRecord& rec : records) {
        rec.repetition_index = get<std::uint64_t>(in);
        rec.true_initial_spin = static_cast<Spin>(get<std::uint8_t>(in));
        const bool has_detection = get<std::uint8_t>(in) != 0;
        rec.source = static_cast<ClickSource>(get<std::uint8_t>(in));
        get<std::uint8_t>(in);
        const std::uint32_t n_flips = get<std::uint32_t>(in);
        const double time = get<double>(in);
        if (has_detection) rec.detection_time = time;
        rec.spin_flip_times.resize(n_flips);
        for (double& t : rec.spin_flip_times) t = get<double>(in);
        if (!in) throw std::runtime_error("truncated ensemble file");
    }
    return records;
}

std::vector<double> ensemble_timestamps(const TraceEnsemble& ensemble) {
    std::vector<double> times;
    const double period = ensemble.scenario.pulse_repetition_time;
    for (const DetectionRecord& rec : ensemble.records) {
        if (rec.detection_time) {
            times.push_back(static_cast<double>(rec.repetition_index) * period +
                            *rec.detection_time);
        }
    }
    return times;
}

}  // namespace spinshot
