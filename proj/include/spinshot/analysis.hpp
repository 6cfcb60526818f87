#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "spinshot/core.hpp"
#include "spinshot/montecarlo.hpp"

namespace spinshot {

/// A sampled curve on a time grid (ns).
struct Curve {
    std::vector<double> t;
    std::vector<double> y;
};

/// Cumulative detection probabilities: `bright` is the loss-only curve
/// (spin flips and back-action disabled), `dark` is leakage only.
struct DetectionCDF {
    std::vector<double> grid;
    std::vector<double> bright;
    std::vector<double> dark;
};

/// Uniform grid over [0, t_max] with the given step; the last point is
/// clamped to t_max.
std::vector<double> time_grid(double t_max, double step_ns);

/// Closed-form detection CDFs for the scenario (leakage and rise time
/// included).
DetectionCDF detection_cdf(const ReadoutScenario& scenario, const std::vector<double>& grid);

/// Same curves estimated by simulation with flips and back-action turned
/// off (bright) and the emitter turned off (dark).
DetectionCDF detection_cdf_mc(const ReadoutScenario& scenario, const std::vector<double>& grid,
                              std::uint64_t n, std::uint64_t seed);

/// Fraction of repetitions with a detection not later than each grid time.
CountFractionCurve count_fraction(const TraceEnsemble& ensemble,
                                  const std::vector<double>& grid);

/// Which flip-probability factor the dark-error convolution uses.
///   window:  1 - exp(-t/tau_SF), constant over the integral (printed form)
///   shifted: 1 - exp(-tau/tau_SF), following the shift variable
enum class DarkErrorVariant { window, shifted };

/// e_bright(t) = 1 - C(t) * exp(-t / flip_time).
Curve error_bright(const Curve& cdf_bright, double flip_time_ns);

/// e_dark(t) = C_d(t) + (1/t) * integral of C(t - tau) * flip factor,
/// trapezoidal on the common grid; the t = 0 limit is 0.
Curve error_dark(const Curve& cdf_bright, const Curve& cdf_dark, double flip_time_ns,
                 DarkErrorVariant variant = DarkErrorVariant::window);

struct FidelityReport {
    std::vector<double> readout_times;
    std::vector<double> e_bright;
    std::vector<double> e_dark;
    std::vector<double> fidelity;
    double optimal_time = 0.0;
    double optimal_fidelity = 0.0;
    double p_bright = 0.5;
    double p_dark = 0.5;
};

/// F(t) = 1 - p_bright * e_bright(t) - p_dark * e_dark(t); argmax ties break
/// toward the earlier time.
FidelityReport fidelity(const Curve& e_bright, const Curve& e_dark, double p_bright,
                        double p_dark);

/// How a repetition counts against the projected state.
///   assignment:  bright error = no click; dark error = any click.
///   state_aware: bright error additionally counts any bright -> dark flip
///                inside the readout window (the readout leaves the wrong
///                state behind even though a photon was seen).
enum class ErrorAccounting { assignment, state_aware };

/// Empirical error curves from ground truth, conditioned on the true spin
/// at pulse start. Throws std::invalid_argument if a conditional subset is
/// empty.
std::pair<Curve, Curve> empirical_errors(const TraceEnsemble& ensemble,
                                         const std::vector<double>& grid,
                                         ErrorAccounting accounting = ErrorAccounting::assignment);

struct FormulaOptions {
    double grid_step = 0.01;  ///< ns
    DarkErrorVariant variant = DarkErrorVariant::window;
    /// Count readout-induced (back-action) flips in the bright flip rate.
    bool include_backaction = true;
};

/// Full formula pipeline: detection CDFs, error curves, fidelity report.
FidelityReport fidelity_from_formulas(const ReadoutScenario& scenario,
                                      const FormulaOptions& options = {});

/// Ensemble route to the same report.
FidelityReport fidelity_from_ensemble(const TraceEnsemble& ensemble,
                                      const std::vector<double>& grid,
                                      ErrorAccounting accounting = ErrorAccounting::assignment);

void write_count_fraction_csv(const CountFractionCurve& curve, std::ostream& out);
void write_fidelity_csv(const FidelityReport& report, std::ostream& out);

}  // namespace spinshot
