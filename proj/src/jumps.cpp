#include "spinshot/jumps.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "spinshot/fit.hpp"

namespace spinshot {

StateTrack assign_states(const std::vector<std::uint8_t>& clicks, double pulse_period) {
    StateTrack track;
    track.bin_width = pulse_period;
    track.source = TrackSource::pulsed;
    track.states.reserve(clicks.size());
    for (std::uint8_t c : clicks) {
        track.states.push_back(static_cast<std::uint8_t>(c ? Spin::bright : Spin::dark));
    }
    return track;
}

StateTrack assign_states(const PulseTrainResult& train) {
    return assign_states(train.clicks, train.pulse_period);
}

StateTrack assign_states_cw(const std::vector<double>& timestamps, double duration,
                            double bin_width) {
    if (!(bin_width > 0.0) || !(duration >= bin_width)) {
        throw std::invalid_argument("assign_states_cw: bad binning");
    }
    StateTrack track;
    track.bin_width = bin_width;
    track.source = TrackSource::cw;
    track.states.assign(static_cast<std::size_t>(duration / bin_width),
                        static_cast<std::uint8_t>(Spin::dark));
    for (double t : timestamps) {
        const auto bin = static_cast<std::size_t>(t / bin_width);
        if (bin < track.states.size()) {
            track.states[bin] = static_cast<std::uint8_t>(Spin::bright);
        }
    }
    return track;
}

StateTrack majority_smooth(const StateTrack& track, int window) {
    if (window < 3 || window % 2 == 0) {
        throw std::invalid_argument("majority_smooth: window must be odd and >= 3");
    }
    const int half = window / 2;
    const auto n = static_cast<int>(track.states.size());
    // Edge bins keep their raw assignment; they belong to censored runs.
    StateTrack out = track;
    for (int i = half; i < n - half; ++i) {
        int bright = 0;
        for (int j = i - half; j <= i + half; ++j) {
            bright += track.states[j] == static_cast<std::uint8_t>(Spin::bright) ? 1 : 0;
        }
        out.states[i] =
            static_cast<std::uint8_t>(2 * bright > window ? Spin::bright : Spin::dark);
    }
    return out;
}

std::vector<Dwell> dwell_times(const StateTrack& track, bool drop_censored) {
    if (track.states.empty()) {
        throw std::invalid_argument("dwell_times: empty track");
    }
    std::vector<Dwell> runs;
    std::size_t run_start = 0;
    for (std::size_t i = 1; i <= track.states.size(); ++i) {
        if (i == track.states.size() || track.states[i] != track.states[run_start]) {
            runs.push_back({track.state(run_start),
                            static_cast<double>(i - run_start) * track.bin_width});
            run_start = i;
        }
    }
    if (drop_censored) {
        if (runs.size() <= 2) return {};
        runs.erase(runs.begin());
        runs.pop_back();
    }
    return runs;
}

WaitingTimeHistogram fit_waiting_times(const std::vector<Dwell>& dwells, double bin_width,
                                       double quantization) {
    if (dwells.size() < 20) {
        throw std::invalid_argument("fit_waiting_times: need at least 20 dwell intervals");
    }
    if (!(bin_width > 0.0)) {
        throw std::invalid_argument("fit_waiting_times: bin width must be positive");
    }

    WaitingTimeHistogram hist;
    double sum = 0.0;
    double max_duration = 0.0;
    for (const Dwell& d : dwells) {
        sum += d.duration;
        max_duration = std::max(max_duration, d.duration);
    }
    hist.total_duration = sum;
    const auto n = static_cast<double>(dwells.size());
    const double mean = sum / n;

    if (quantization > 0.0 && mean > quantization) {
        // Interval-censored exponential: run lengths are geometric with
        // per-bin flip probability q = bin/mean, so tau = -bin/ln(1 - q).
        const double q = quantization / mean;
        hist.mle_time_constant = -quantization / std::log1p(-q);
        hist.mle_error = hist.mle_time_constant / std::sqrt(n);
    } else {
        hist.mle_time_constant = mean;
        hist.mle_error = mean / std::sqrt(n);
    }

    const auto n_bins = static_cast<std::size_t>(std::ceil(max_duration / bin_width)) + 1;
    hist.counts.assign(n_bins, 0);
    hist.bin_edges.resize(n_bins + 1);
    for (std::size_t i = 0; i <= n_bins; ++i) {
        hist.bin_edges[i] = static_cast<double>(i) * bin_width;
    }
    for (const Dwell& d : dwells) {
        hist.counts[static_cast<std::size_t>(d.duration / bin_width)] += 1;
    }

    // Log-linear cross-check on non-empty bins, count-weighted so the
    // sparse tail does not dominate the slope.
    std::vector<double> centers;
    std::vector<double> log_counts;
    std::vector<double> weights;
    for (std::size_t i = 0; i < n_bins; ++i) {
        if (hist.counts[i] > 0) {
            centers.push_back((hist.bin_edges[i] + hist.bin_edges[i + 1]) * 0.5);
            log_counts.push_back(std::log(static_cast<double>(hist.counts[i])));
            weights.push_back(static_cast<double>(hist.counts[i]));
        }
    }
    const LineFit line = fit_line(centers, log_counts, weights);
    if (line.degenerate || !(line.slope < 0.0)) {
        hist.lsq_degenerate = true;
    } else {
        hist.lsq_time_constant = -1.0 / line.slope;
    }
    return hist;
}

ConditionalProbability conditional_probability(const std::vector<TwoPulseOutcome>& pairs,
                                               bool condition_click) {
    ConditionalProbability result;
    for (const TwoPulseOutcome& pair : pairs) {
        if (pair.click1 == condition_click) {
            result.n_condition += 1;
            if (pair.click2) result.n_success += 1;
        }
    }
    if (result.n_condition == 0) {
        throw std::invalid_argument("conditional_probability: empty conditional subset");
    }
    const double n = static_cast<double>(result.n_condition);
    const double p = static_cast<double>(result.n_success) / n;
    result.p = p;
    constexpr double z = 1.959963985;  // 95%
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double spread = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    result.wilson_low = std::max(0.0, center - spread);
    result.wilson_high = std::min(1.0, center + spread);
    return result;
}

DecayFit fit_conditional_decay(const std::vector<double>& delays,
                               const std::vector<double>& probabilities) {
    if (delays.size() < 5 || delays.size() != probabilities.size()) {
        throw std::invalid_argument("fit_conditional_decay: need at least 5 delay points");
    }
    const double span = *std::max_element(delays.begin(), delays.end()) -
                        *std::min_element(delays.begin(), delays.end());
    const double p_front = probabilities.front();
    const double p_back = probabilities.back();

    DecayFit result;
    if (std::abs(p_front - p_back) < 1e-9) {
        result.bounded = false;
        result.p0 = p_front;
        result.p_inf = p_back;
        return result;
    }

    // Parameters: p_inf, p0, rate.
    FitModel model = [&delays](std::size_t i, const std::vector<double>& p, double& value,
                               std::vector<double>& grad) {
        const double decay = std::exp(-p[2] * delays[i]);
        value = p[0] + (p[1] - p[0]) * decay;
        grad[0] = 1.0 - decay;
        grad[1] = decay;
        grad[2] = -(p[1] - p[0]) * delays[i] * decay;
    };
    std::vector<double> initial = {p_back, p_front, 3.0 / std::max(span, 1e-9)};
    const FitResult fit = levenberg_marquardt(probabilities, model, initial);
    if (!fit.converged) {
        throw std::runtime_error("fit_conditional_decay: no convergence");
    }
    result.converged = true;
    result.p_inf = fit.params[0];
    result.p0 = fit.params[1];
    const double rate = fit.params[2];
    if (!(rate > 0.0) || 1.0 / rate > 100.0 * span) {
        result.bounded = false;
        result.tau = rate > 0.0 ? 1.0 / rate : kInfinity;
        return result;
    }
    result.tau = 1.0 / rate;
    // sigma(tau) = sigma(rate) / rate^2
    result.tau_error = std::sqrt(std::max(fit.covariance[8], 0.0)) / (rate * rate);
    return result;
}

void write_track_csv(const StateTrack& track, std::ostream& out) {
    out << "bin_start_ns,state\n";
    char buffer[64];
    for (std::size_t i = 0; i < track.states.size(); ++i) {
        std::snprintf(buffer, sizeof buffer, "%.9g,", static_cast<double>(i) * track.bin_width);
        out << buffer << to_string(track.state(i)) << '\n';
    }
}

void write_histogram_csv(const WaitingTimeHistogram& histogram, std::ostream& out) {
    out << "bin_center_ns,count\n";
    char buffer[64];
    for (std::size_t i = 0; i < histogram.counts.size(); ++i) {
        const double center = (histogram.bin_edges[i] + histogram.bin_edges[i + 1]) * 0.5;
        std::snprintf(buffer, sizeof buffer, "%.9g,%llu\n", center,
                      static_cast<unsigned long long>(histogram.counts[i]));
        out << buffer;
    }
}

}  // namespace spinshot
