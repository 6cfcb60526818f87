#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "spinshot/core.hpp"

namespace spinshot {

/// Two-sided intensity correlation estimate, baseline-normalized so that
/// g2 -> 1 at large |tau|.
struct CorrelationCurve {
    std::vector<double> tau;  ///< bin centers, ns; symmetric around 0
    std::vector<double> g2;
    double baseline = 1.0;    ///< Poisson pair count used for normalization
};

/// All-pairs delay histogram of a sorted timestamp stream, normalized by
/// the Poisson expectation rate^2 * duration * bin_width (with the finite
/// duration triangular correction). Throws on fewer than 2 timestamps.
CorrelationCurve g2_estimate(const std::vector<double>& timestamps, double bin_width,
                             double max_delay);

/// Exponential-bunching fit g2(tau) = 1 + A exp(-lambda |tau|) decomposed
/// into on/off dwell times: A = tau_off/tau_on, lambda = 1/tau_on + 1/tau_off.
struct BunchingFit {
    double tau_on = 0.0;
    double tau_off = 0.0;
    double amplitude = 0.0;
    double decay_rate = 0.0;
    double residual = 0.0;
    std::array<double, 4> covariance{};  ///< 2x2 over (amplitude, decay_rate)
    int iterations = 0;
    bool converged = false;
};

/// Fits over |tau| > exclude_window. Throws std::runtime_error if the
/// fitted amplitude is not positive (no bunching detectable).
BunchingFit bunching_fit(const CorrelationCurve& curve, double exclude_window);

/// Synthetic curve from the bunching expression, for round-trip checks.
CorrelationCurve bunching_curve(double tau_on, double tau_off,
                                const std::vector<double>& tau_grid);

/// Incoherent three-level rate model: ground bright, ground dark, excited.
/// Pumping drives bright -> excited; decay splits between spin-conserving
/// (back to bright) and spin-nonconserving (to dark); co-tunneling couples
/// the ground states.
struct RateModel {
    double pump_rate = 0.0;              ///< ns^-1
    double gamma_spin_conserving = 0.0;  ///< ns^-1, excited -> ground bright
    double gamma_spin_nonconserving = 0.0;  ///< ns^-1, excited -> ground dark
    double k_bright_to_dark = 0.0;       ///< ns^-1
    double k_dark_to_bright = 0.0;       ///< ns^-1

    double total_decay() const { return gamma_spin_conserving + gamma_spin_nonconserving; }
    double branching_ratio() const { return gamma_spin_conserving / gamma_spin_nonconserving; }

    /// Rates from a scenario plus a drive strength s = power / saturation;
    /// the pump rate maps as P = s * total_decay / 2 so the excited
    /// population approaches 1/2 far above saturation.
    static RateModel from_scenario(const ReadoutScenario& scenario, double saturation_parameter);
};

struct SteadyState {
    double ground_bright = 0.0;
    double ground_dark = 0.0;
    double excited = 0.0;
};

/// Solves d rho / dt = 0 with populations summing to one. The dark-state
/// population is the optical-pumping initialization fidelity. Throws
/// std::invalid_argument when all rates vanish.
SteadyState rate_steady_state(const RateModel& model);

/// Classical RK4 integration of the same system from `from`, fixed step.
SteadyState integrate_rate_equations(const RateModel& model, SteadyState from, double t_end,
                                     double dt);

/// g2(tau) = rho_x(tau | ground bright at 0) / rho_x(steady state), by RK4
/// propagation. Throws std::runtime_error when the steady-state excited
/// population vanishes.
CorrelationCurve g2_from_rates(const RateModel& model, const std::vector<double>& tau_grid);

struct BranchingFitResult {
    double ratio = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    bool identifiable = true;
    double residual = 0.0;
};

/// One-dimensional least squares over the spin-nonconserving rate, holding
/// the other template rates fixed; the confidence interval comes from the
/// residual curvature. Flags non-identifiability instead of fabricating a
/// ratio.
BranchingFitResult fit_branching_ratio(const CorrelationCurve& measured,
                                       const RateModel& model_template);

/// Timestamp ingestion: one ns value per line.
std::vector<double> read_timestamps_csv(std::istream& in);
void write_correlation_csv(const CorrelationCurve& curve, std::ostream& out);

}  // namespace spinshot
