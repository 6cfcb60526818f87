#include "spinshot/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "spinshot/fit.hpp"

namespace spinshot {

CorrelationCurve g2_estimate(const std::vector<double>& timestamps, double bin_width,
                             double max_delay) {
    if (timestamps.size() < 2) {
        throw std::invalid_argument("g2_estimate: need at least 2 timestamps");
    }
    if (!(bin_width > 0.0) || !(max_delay > bin_width)) {
        throw std::invalid_argument("g2_estimate: bad binning");
    }
    if (!std::is_sorted(timestamps.begin(), timestamps.end())) {
        throw std::invalid_argument("g2_estimate: timestamps must be sorted");
    }

    const auto n_bins = static_cast<std::size_t>(std::ceil(max_delay / bin_width - 1e-9));
    const double window = static_cast<double>(n_bins) * bin_width;
    std::vector<std::uint64_t> counts(n_bins, 0);

    for (std::size_t i = 0; i < timestamps.size(); ++i) {
        for (std::size_t j = i + 1; j < timestamps.size(); ++j) {
            const double delay = timestamps[j] - timestamps[i];
            if (delay >= window) break;
            counts[static_cast<std::size_t>(delay / bin_width)] += 1;
        }
    }

    const double duration = timestamps.back() - timestamps.front();
    const double rate = static_cast<double>(timestamps.size()) / duration;
    const double pair_density = rate * rate * bin_width;

    CorrelationCurve curve;
    curve.tau.reserve(2 * n_bins);
    curve.g2.reserve(2 * n_bins);
    curve.baseline = pair_density * duration;
    auto value_at = [&](std::size_t k) {
        const double center = (static_cast<double>(k) + 0.5) * bin_width;
        // Triangular finite-duration correction; degenerate for delays at
        // the stream span, so keep the denominator positive.
        const double support = std::max(duration - center, 0.5 * bin_width);
        return static_cast<double>(counts[k]) / (pair_density * support);
    };
    for (std::size_t k = n_bins; k-- > 0;) {
        curve.tau.push_back(-(static_cast<double>(k) + 0.5) * bin_width);
        curve.g2.push_back(value_at(k));
    }
    for (std::size_t k = 0; k < n_bins; ++k) {
        curve.tau.push_back((static_cast<double>(k) + 0.5) * bin_width);
        curve.g2.push_back(value_at(k));
    }
    return curve;
}

BunchingFit bunching_fit(const CorrelationCurve& curve, double exclude_window) {
    std::vector<double> tau;
    std::vector<double> g2;
    double peak = 0.0;
    for (std::size_t i = 0; i < curve.tau.size(); ++i) {
        const double abs_tau = std::abs(curve.tau[i]);
        if (abs_tau > exclude_window) {
            tau.push_back(abs_tau);
            g2.push_back(curve.g2[i]);
            peak = std::max(peak, curve.g2[i]);
        }
    }
    if (tau.size() < 3) throw std::invalid_argument("bunching_fit: too few bins after exclusion");

    const double span = *std::max_element(tau.begin(), tau.end());
    std::vector<double> initial = {std::max(peak - 1.0, 1e-3), 3.0 / span};
    FitModel model = [&tau](std::size_t i, const std::vector<double>& p, double& value,
                            std::vector<double>& grad) {
        const double decay = std::exp(-p[1] * tau[i]);
        value = 1.0 + p[0] * decay;
        grad[0] = decay;
        grad[1] = -p[0] * tau[i] * decay;
    };
    const FitResult fit = levenberg_marquardt(g2, model, initial);

    BunchingFit result;
    result.amplitude = fit.params[0];
    result.decay_rate = fit.params[1];
    result.residual = fit.ssr;
    result.iterations = fit.iterations;
    result.converged = fit.converged;
    for (std::size_t i = 0; i < 4; ++i) result.covariance[i] = fit.covariance[i];
    if (!(result.amplitude > 0.0) || !(result.decay_rate > 0.0)) {
        throw std::runtime_error("bunching_fit: no bunching detectable (amplitude <= 0)");
    }
    // A = tau_off/tau_on and lambda = 1/tau_on + 1/tau_off invert to:
    result.tau_on = (1.0 + result.amplitude) / (result.amplitude * result.decay_rate);
    result.tau_off = (1.0 + result.amplitude) / result.decay_rate;
    return result;
}

CorrelationCurve bunching_curve(double tau_on, double tau_off,
                                const std::vector<double>& tau_grid) {
    CorrelationCurve curve;
    curve.tau = tau_grid;
    curve.g2.reserve(tau_grid.size());
    const double amplitude = tau_off / tau_on;
    const double rate = 1.0 / tau_on + 1.0 / tau_off;
    for (double tau : tau_grid) {
        curve.g2.push_back(1.0 + amplitude * std::exp(-rate * std::abs(tau)));
    }
    return curve;
}

RateModel RateModel::from_scenario(const ReadoutScenario& scenario,
                                   double saturation_parameter) {
    RateModel m;
    const double total = 1.0 / scenario.radiative_lifetime_ns();
    const double r = scenario.branching_ratio;
    m.gamma_spin_nonconserving = r < kInfinity ? total / (r + 1.0) : 0.0;
    m.gamma_spin_conserving = total - m.gamma_spin_nonconserving;
    m.k_bright_to_dark = 1.0 / scenario.flip_time_to_dark();
    m.k_dark_to_bright = 1.0 / scenario.flip_time_to_bright();
    m.pump_rate = saturation_parameter * total / 2.0;
    return m;
}

namespace {

void validate_rates(const RateModel& m) {
    const double rates[] = {m.pump_rate, m.gamma_spin_conserving, m.gamma_spin_nonconserving,
                            m.k_bright_to_dark, m.k_dark_to_bright};
    double total = 0.0;
    for (double r : rates) {
        if (!(r >= 0.0) || !std::isfinite(r)) {
            throw std::invalid_argument("rate model: rates must be finite and non-negative");
        }
        total += r;
    }
    if (total <= 0.0) throw std::invalid_argument("rate model: all rates zero");
}

struct Derivative {
    double b, d, x;
};

Derivative rhs(const RateModel& m, const SteadyState& s) {
    Derivative out;
    out.b = -m.pump_rate * s.ground_bright + m.gamma_spin_conserving * s.excited -
            m.k_bright_to_dark * s.ground_bright + m.k_dark_to_bright * s.ground_dark;
    out.d = m.gamma_spin_nonconserving * s.excited + m.k_bright_to_dark * s.ground_bright -
            m.k_dark_to_bright * s.ground_dark;
    out.x = m.pump_rate * s.ground_bright - m.total_decay() * s.excited;
    return out;
}

}  // namespace

SteadyState rate_steady_state(const RateModel& model) {
    validate_rates(model);
    // Two balance rows plus normalization.
    std::vector<double> a = {
        -(model.pump_rate + model.k_bright_to_dark), model.k_dark_to_bright,
        model.gamma_spin_conserving,
        model.k_bright_to_dark, -model.k_dark_to_bright, model.gamma_spin_nonconserving,
        1.0, 1.0, 1.0};
    std::vector<double> b = {0.0, 0.0, 1.0};
    if (!solve_linear(a, b, 3)) {
        throw std::invalid_argument("rate model: singular steady-state system");
    }
    for (double& v : b) {
        if (v < 0.0 && v > -1e-12) v = 0.0;
    }
    return {b[0], b[1], b[2]};
}

SteadyState integrate_rate_equations(const RateModel& model, SteadyState from, double t_end,
                                     double dt) {
    validate_rates(model);
    SteadyState s = from;
    double t = 0.0;
    while (t < t_end) {
        const double h = std::min(dt, t_end - t);
        const Derivative k1 = rhs(model, s);
        const SteadyState s2{s.ground_bright + 0.5 * h * k1.b, s.ground_dark + 0.5 * h * k1.d,
                             s.excited + 0.5 * h * k1.x};
        const Derivative k2 = rhs(model, s2);
        const SteadyState s3{s.ground_bright + 0.5 * h * k2.b, s.ground_dark + 0.5 * h * k2.d,
                             s.excited + 0.5 * h * k2.x};
        const Derivative k3 = rhs(model, s3);
        const SteadyState s4{s.ground_bright + h * k3.b, s.ground_dark + h * k3.d,
                             s.excited + h * k3.x};
        const Derivative k4 = rhs(model, s4);
        s.ground_bright += h / 6.0 * (k1.b + 2.0 * k2.b + 2.0 * k3.b + k4.b);
        s.ground_dark += h / 6.0 * (k1.d + 2.0 * k2.d + 2.0 * k3.d + k4.d);
        s.excited += h / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
        t += h;
    }
    return s;
}

CorrelationCurve g2_from_rates(const RateModel& model, const std::vector<double>& tau_grid) {
    validate_rates(model);
    if (!std::is_sorted(tau_grid.begin(), tau_grid.end()) ||
        (!tau_grid.empty() && tau_grid.front() < 0.0)) {
        throw std::invalid_argument("g2_from_rates: grid must be sorted and non-negative");
    }
    const SteadyState ss = rate_steady_state(model);
    if (!(ss.excited > 0.0)) {
        throw std::runtime_error("g2_from_rates: zero steady-state excited population");
    }
    const double max_rate = std::max({model.pump_rate, model.total_decay(),
                                      model.k_bright_to_dark, model.k_dark_to_bright});
    const double dt = 0.01 / max_rate;

    CorrelationCurve curve;
    curve.tau = tau_grid;
    curve.g2.reserve(tau_grid.size());
    // Emission projects the system into the ground bright state.
    SteadyState s{1.0, 0.0, 0.0};
    double t = 0.0;
    for (double tau : tau_grid) {
        s = integrate_rate_equations(model, s, tau - t, dt);
        t = tau;
        curve.g2.push_back(s.excited / ss.excited);
    }
    return curve;
}

BranchingFitResult fit_branching_ratio(const CorrelationCurve& measured,
                                       const RateModel& model_template) {
    // Fold to non-negative delays on a sorted grid.
    std::vector<double> tau;
    std::vector<double> g2;
    {
        std::vector<std::pair<double, double>> folded;
        for (std::size_t i = 0; i < measured.tau.size(); ++i) {
            folded.emplace_back(std::abs(measured.tau[i]), measured.g2[i]);
        }
        std::sort(folded.begin(), folded.end());
        for (auto& [t, v] : folded) {
            tau.push_back(t);
            g2.push_back(v);
        }
    }

    const double gamma_total = model_template.total_decay();
    auto ssr_for = [&](double gamma_d) {
        RateModel m = model_template;
        m.gamma_spin_nonconserving = gamma_d;
        m.gamma_spin_conserving = gamma_total - gamma_d;
        const CorrelationCurve model_curve = g2_from_rates(m, tau);
        double ssr = 0.0;
        for (std::size_t i = 0; i < g2.size(); ++i) {
            const double r = g2[i] - model_curve.g2[i];
            ssr += r * r;
        }
        return ssr;
    };

    // Coarse log scan, then parabolic refinement.
    const double lo = gamma_total * 1e-6;
    const double hi = gamma_total * 0.5;
    constexpr int kScan = 41;
    double best_gamma = lo;
    double best_ssr = kInfinity;
    double ssr_range_min = kInfinity;
    double ssr_range_max = 0.0;
    for (int i = 0; i < kScan; ++i) {
        const double gamma = lo * std::pow(hi / lo, static_cast<double>(i) / (kScan - 1));
        const double ssr = ssr_for(gamma);
        ssr_range_min = std::min(ssr_range_min, ssr);
        ssr_range_max = std::max(ssr_range_max, ssr);
        if (ssr < best_ssr) {
            best_ssr = ssr;
            best_gamma = gamma;
        }
    }
    for (int pass = 0; pass < 40; ++pass) {
        const double step = best_gamma * 0.05 * std::pow(0.7, pass);
        for (double candidate : {best_gamma - step, best_gamma + step}) {
            if (candidate <= 0.0 || candidate >= gamma_total) continue;
            const double ssr = ssr_for(candidate);
            if (ssr < best_ssr) {
                best_ssr = ssr;
                best_gamma = candidate;
            }
        }
    }

    BranchingFitResult result;
    result.residual = best_ssr;
    result.ratio = (gamma_total - best_gamma) / best_gamma;

    // Curvature of the residual surface around the optimum.
    const double h = best_gamma * 0.05;
    const double ssr_minus = ssr_for(best_gamma - h);
    const double ssr_plus = ssr_for(best_gamma + h);
    const double curvature = (ssr_plus - 2.0 * best_ssr + ssr_minus) / (h * h);
    const auto dof = static_cast<double>(g2.size() > 1 ? g2.size() - 1 : 1);
    const double noise = best_ssr / dof;

    const bool at_boundary = best_gamma <= lo * 1.0001;
    const bool flat = curvature <= 0.0 ||
                      (ssr_range_max - ssr_range_min) <= 1e-12 * (1.0 + ssr_range_max);
    if (at_boundary || flat) {
        result.identifiable = false;
        result.ci_low = result.ratio;
        result.ci_high = kInfinity;
        return result;
    }
    const double sigma_gamma = std::sqrt(std::max(2.0 * noise / curvature, 0.0));
    const double gamma_lo = std::max(best_gamma - sigma_gamma, 1e-300);
    const double gamma_hi = best_gamma + sigma_gamma;
    result.ci_low = (gamma_total - gamma_hi) / gamma_hi;
    result.ci_high = (gamma_total - gamma_lo) / gamma_lo;
    if (sigma_gamma >= best_gamma) {
        result.identifiable = false;
        result.ci_high = kInfinity;
    }
    return result;
}

std::vector<double> read_timestamps_csv(std::istream& in) {
    std::vector<double> times;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        times.push_back(std::stod(line));
    }
    return times;
}

void write_correlation_csv(const CorrelationCurve& curve, std::ostream& out) {
    out << "tau_ns,g2\n";
    char buffer[80];
    for (std::size_t i = 0; i < curve.tau.size(); ++i) {
        std::snprintf(buffer, sizeof buffer, "%.9g,%.9g\n", curve.tau[i], curve.g2[i]);
        out << buffer;
    }
}

}  // namespace spinshot
