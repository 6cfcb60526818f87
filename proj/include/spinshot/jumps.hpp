#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "spinshot/core.hpp"
#include "spinshot/montecarlo.hpp"

namespace spinshot {

enum class TrackSource { pulsed, cw };

/// Per-bin spin assignment: click (or any photon in the bin) means bright.
struct StateTrack {
    double bin_width = 0.0;  ///< ns; bin k covers [k*bin_width, (k+1)*bin_width)
    std::vector<std::uint8_t> states;  ///< Spin values
    TrackSource source = TrackSource::pulsed;

    Spin state(std::size_t k) const { return static_cast<Spin>(states[k]); }
};

/// Pulsed assignment: one state per pulse, spaced by the pulse period.
StateTrack assign_states(const std::vector<std::uint8_t>& clicks, double pulse_period);
StateTrack assign_states(const PulseTrainResult& train);

/// CW assignment: at least one photon inside a time bin reads bright.
StateTrack assign_states_cw(const std::vector<double>& timestamps, double duration,
                            double bin_width = 12.0);

/// Majority vote over a centered odd window; removes isolated
/// misassignments before dwell extraction.
StateTrack majority_smooth(const StateTrack& track, int window = 3);

struct Dwell {
    Spin state = Spin::bright;
    double duration = 0.0;  ///< ns
};

/// Run-length encoding of the track. The first and last runs are censored
/// by the observation window and are dropped by default.
std::vector<Dwell> dwell_times(const StateTrack& track, bool drop_censored = true);

struct WaitingTimeHistogram {
    std::vector<double> bin_edges;
    std::vector<std::uint64_t> counts;
    double mle_time_constant = 0.0;  ///< exponential MLE of the dwell time
    double mle_error = 0.0;          ///< standard error of the MLE
    double lsq_time_constant = 0.0;  ///< log-linear histogram cross-check
    bool lsq_degenerate = false;
    double total_duration = 0.0;     ///< summed dwell time entering the fit
};

/// Histogram plus exponential fits of the dwell intervals. Durations that
/// are exact multiples of `quantization` (a track bin width) use the
/// interval-censored (geometric) MLE, which removes the discretization
/// bias; pass 0 for continuous data. Requires at least 20 intervals.
WaitingTimeHistogram fit_waiting_times(const std::vector<Dwell>& dwells, double bin_width,
                                       double quantization = 0.0);

struct ConditionalProbability {
    double p = 0.0;
    double wilson_low = 0.0;
    double wilson_high = 0.0;
    std::uint64_t n_condition = 0;
    std::uint64_t n_success = 0;
};

/// P(second pulse reads bright | first pulse outcome == condition), with a
/// 95% Wilson interval. Throws when no pair satisfies the condition.
ConditionalProbability conditional_probability(const std::vector<TwoPulseOutcome>& pairs,
                                               bool condition_click);

struct DecayFit {
    double tau = 0.0;
    double tau_error = 0.0;
    double p0 = 0.0;
    double p_inf = 0.0;
    bool converged = false;
    bool bounded = true;  ///< false when the decay is indistinguishable from flat
};

/// Least-squares fit of p(tau) = p_inf + (p0 - p_inf) exp(-tau/tau_fit)
/// over a delay sweep. Needs at least 5 points.
DecayFit fit_conditional_decay(const std::vector<double>& delays,
                               const std::vector<double>& probabilities);

void write_track_csv(const StateTrack& track, std::ostream& out);
void write_histogram_csv(const WaitingTimeHistogram& histogram, std::ostream& out);

}  // namespace spinshot
