#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "spinshot/core.hpp"
#include "spinshot/rng.hpp"

namespace spinshot {

/// One seeded batch of simulated readout repetitions. Regenerating with the
/// same (scenario, seed) reproduces the records bit-identically regardless
/// of thread count.
struct TraceEnsemble {
    ReadoutScenario scenario;
    std::uint64_t seed = 0;
    std::vector<DetectionRecord> records;
};

/// Outcome of one two-pulse repetition. Detection is per pulse; the spin
/// evolves freely (co-tunneling only) between the pulses.
struct TwoPulseOutcome {
    bool click1 = false;
    bool click2 = false;
    Spin true_initial_spin = Spin::bright;
    Spin spin_at_second_pulse = Spin::bright;
};

/// Pulse train with detections assigned per pulse and the true spin state
/// sampled at every pulse start. Dead time carries across pulse boundaries.
struct PulseTrainResult {
    double pulse_duration = 0.0;
    double pulse_period = 0.0;
    std::vector<std::uint8_t> clicks;         ///< 1 if a click fell in pulse k
    std::vector<std::uint8_t> spin_at_start;  ///< Spin at each pulse start
};

/// Simulate a single readout window [0, pulse_duration] from a given
/// initial spin. Ground truth (spin flips) is tracked to the end of the
/// window even after the detector has clicked.
DetectionRecord simulate_repetition(const ReadoutScenario& scenario, StreamRng& rng,
                                    Spin initial_spin);

/// Repetitions are independent: the initial spin of each is drawn from the
/// occupancy and relaxed over the inter-pulse gap before the window is
/// simulated. threads == 0 picks the hardware concurrency.
TraceEnsemble simulate_ensemble(const ReadoutScenario& scenario, std::uint64_t seed,
                                int threads = 0);

/// Two pulses of scenario.pulse_duration separated by tau_delay (end of
/// first to start of second). Each pulse uses an independent detector
/// window; tau_delay below the dead time is rejected unless
/// enforce_dead_time is false.
std::vector<TwoPulseOutcome> simulate_two_pulse(const ReadoutScenario& scenario,
                                                double tau_delay, std::uint64_t seed,
                                                bool enforce_dead_time = true,
                                                int threads = 0);

/// Continuous train of n_pulses readout pulses spaced by
/// scenario.pulse_repetition_time with one uninterrupted spin trajectory.
PulseTrainResult simulate_pulse_train(const ReadoutScenario& scenario, std::uint64_t n_pulses,
                                      std::uint64_t seed);

/// Continuous-wave drive for duration_ns; returns detector click timestamps
/// (dead-time filtered, multiple clicks allowed).
std::vector<double> simulate_cw_stream(const ReadoutScenario& scenario, double duration_ns,
                                       std::uint64_t seed);

/// Estimated memory for an ensemble; simulate_ensemble throws
/// std::runtime_error when this exceeds the budget (default 2 GiB).
std::uint64_t ensemble_memory_estimate(const ReadoutScenario& scenario);
void set_ensemble_memory_budget(std::uint64_t bytes);

void write_ensemble_csv(const TraceEnsemble& ensemble, std::ostream& out);
void write_ensemble_binary(const TraceEnsemble& ensemble, std::ostream& out);
/// Reads the binary format back; scenario is not stored and must be
/// supplied by the caller.
std::vector<DetectionRecord> read_ensemble_binary(std::istream& in);

/// Absolute click timestamps reconstructed from per-repetition records,
/// one pulse period apart.
std::vector<double> ensemble_timestamps(const TraceEnsemble& ensemble);

}  // namespace spinshot
