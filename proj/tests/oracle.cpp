#include "oracle.hpp"

#include <cmath>

namespace spinshot::oracle {

DetectionRecord fixed_step_repetition(const ReadoutScenario& scenario, StreamRng& rng,
                                      Spin initial_spin, double dt_ns) {
    const double p_emit = scenario.emission_rate() * dt_ns;
    const double p_leak = scenario.leakage_rate() * dt_ns;
    const double p_flip_to_dark = dt_ns / scenario.flip_time_to_dark();
    const double p_flip_to_bright = dt_ns / scenario.flip_time_to_bright();
    const double p_backaction = scenario.branching_ratio < kInfinity
                                    ? 1.0 / (scenario.branching_ratio + 1.0)
                                    : 0.0;
    const auto n_steps = static_cast<std::uint64_t>(std::llround(scenario.pulse_duration / dt_ns));

    DetectionRecord rec;
    rec.true_initial_spin = initial_spin;
    Spin spin = initial_spin;
    double dead_until = 0.0;

    for (std::uint64_t step = 0; step < n_steps; ++step) {
        const double t = (static_cast<double>(step) + 1.0) * dt_ns;
        Spin next = spin;
        if (spin == Spin::bright) {
            if (rng.next_bernoulli(p_emit)) {
                bool accept = true;
                if (scenario.rise_time > 0.0) {
                    accept = rng.next_bernoulli(-std::expm1(-t / scenario.rise_time));
                }
                if (accept) {
                    // Spin-nonconserving emissions are off the readout mode
                    // and never click.
                    const bool flips = rng.next_bernoulli(p_backaction);
                    if (flips) {
                        next = Spin::dark;
                    } else if (rng.next_bernoulli(scenario.overall_efficiency) &&
                               !rec.detection_time && t >= dead_until) {
                        rec.detection_time = t;
                        rec.source = ClickSource::emitter;
                        dead_until = t + scenario.detector_dead_time;
                    }
                }
            }
            if (rng.next_bernoulli(p_flip_to_dark)) next = Spin::dark;
        } else {
            if (rng.next_bernoulli(p_flip_to_bright)) next = Spin::bright;
        }
        if (rng.next_bernoulli(p_leak) && !rec.detection_time && t >= dead_until) {
            rec.detection_time = t;
            rec.source = ClickSource::leakage;
            dead_until = t + scenario.detector_dead_time;
        }
        if (next != spin) {
            rec.spin_flip_times.push_back(t);
            spin = next;
        }
    }
    return rec;
}

TraceEnsemble fixed_step_ensemble(const ReadoutScenario& scenario, std::uint64_t seed,
                                  double dt_ns) {
    TraceEnsemble ensemble;
    ensemble.scenario = scenario;
    ensemble.seed = seed;
    ensemble.records.resize(scenario.n_repetitions);
    for (std::uint64_t k = 0; k < scenario.n_repetitions; ++k) {
        StreamRng rng(seed, k);
        const Spin initial = rng.next_bernoulli(scenario.p_bright) ? Spin::bright : Spin::dark;
        ensemble.records[k] = fixed_step_repetition(scenario, rng, initial, dt_ns);
        ensemble.records[k].repetition_index = k;
    }
    return ensemble;
}

}  // namespace spinshot::oracle
