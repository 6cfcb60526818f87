#include "spinshot/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace spinshot {

std::vector<double> time_grid(double t_max, double step_ns) {
    if (!(t_max > 0.0) || !(step_ns > 0.0)) {
        throw std::invalid_argument("time_grid needs positive extent and step");
    }
    std::vector<double> grid;
    const auto n = static_cast<std::size_t>(std::ceil(t_max / step_ns - 1e-9));
    grid.reserve(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        grid.push_back(std::min(static_cast<double>(i) * step_ns, t_max));
    }
    return grid;
}

DetectionCDF detection_cdf(const ReadoutScenario& scenario, const std::vector<double>& grid) {
    scenario.validate();
    const double rate = scenario.detection_rate();
    const double leak = scenario.leakage_rate();
    const double rise = scenario.rise_time;
    DetectionCDF cdf;
    cdf.grid = grid;
    cdf.bright.reserve(grid.size());
    cdf.dark.reserve(grid.size());
    for (double t : grid) {
        // Integrated emitter click rate; with a rise time the drive ramps
        // as 1 - exp(-t/rise).
        double exposure = rate * t;
        if (rise > 0.0) {
            exposure = rate * (t - rise * (-std::expm1(-t / rise)));
        }
        cdf.bright.push_back(-std::expm1(-(exposure + leak * t)));
        cdf.dark.push_back(-std::expm1(-leak * t));
    }
    return cdf;
}

DetectionCDF detection_cdf_mc(const ReadoutScenario& scenario, const std::vector<double>& grid,
                              std::uint64_t n, std::uint64_t seed) {
    ReadoutScenario bright_only = scenario;
    bright_only.spin_flip_time = kInfinity;
    bright_only.spin_flip_time_on.reset();
    bright_only.spin_flip_time_off.reset();
    bright_only.branching_ratio = kInfinity;
    if (bright_only.geometry == Geometry::voigt) bright_only.geometry = Geometry::faraday;
    bright_only.p_bright = 1.0;
    bright_only.p_dark = 0.0;
    bright_only.n_repetitions = n;

    ReadoutScenario leak_only = bright_only;
    leak_only.overall_efficiency = 0.0;  // emitter off

    const TraceEnsemble bright = simulate_ensemble(bright_only, seed);
    const TraceEnsemble dark = simulate_ensemble(leak_only, seed + 1);
    DetectionCDF cdf;
    cdf.grid = grid;
    cdf.bright = count_fraction(bright, grid).fractions;
    cdf.dark = count_fraction(dark, grid).fractions;
    return cdf;
}

CountFractionCurve count_fraction(const TraceEnsemble& ensemble,
                                  const std::vector<double>& grid) {
    if (ensemble.records.empty()) {
        throw std::invalid_argument("count_fraction: empty ensemble");
    }
    std::vector<double> times;
    times.reserve(ensemble.records.size());
    for (const DetectionRecord& rec : ensemble.records) {
        if (rec.detection_time) times.push_back(*rec.detection_time);
    }
    std::sort(times.begin(), times.end());

    CountFractionCurve curve;
    curve.readout_times = grid;
    curve.n_repetitions = ensemble.records.size();
    curve.fractions.reserve(grid.size());
    const double n = static_cast<double>(ensemble.records.size());
    for (double t : grid) {
        const auto upper = std::upper_bound(times.begin(), times.end(), t);
        curve.fractions.push_back(static_cast<double>(upper - times.begin()) / n);
    }
    return curve;
}

Curve error_bright(const Curve& cdf_bright, double flip_time_ns) {
    Curve e;
    e.t = cdf_bright.t;
    e.y.reserve(cdf_bright.y.size());
    for (std::size_t i = 0; i < cdf_bright.y.size(); ++i) {
        e.y.push_back(1.0 - cdf_bright.y[i] * std::exp(-cdf_bright.t[i] / flip_time_ns));
    }
    return e;
}

Curve error_dark(const Curve& cdf_bright, const Curve& cdf_dark, double flip_time_ns,
                 DarkErrorVariant variant) {
    if (cdf_bright.t.size() != cdf_dark.t.size() || cdf_bright.t != cdf_dark.t) {
        throw std::invalid_argument("error_dark: curves must share one grid");
    }
    const std::vector<double>& grid = cdf_bright.t;
    const std::size_t n = grid.size();
    Curve e;
    e.t = grid;
    e.y.resize(n);

    // Uniform-grid convolution by trapezoid; grids from time_grid() are
    // uniform except possibly the clamped last step, which detection grids
    // produced here never trigger in practice.
    for (std::size_t i = 0; i < n; ++i) {
        const double t = grid[i];
        if (i == 0 || t <= 0.0) {
            e.y[i] = cdf_dark.y[i];
            continue;
        }
        double integral = 0.0;
        for (std::size_t j = 0; j + 1 <= i; ++j) {
            auto integrand = [&](std::size_t k) {
                const double tau = grid[k];
                const double arg = variant == DarkErrorVariant::window ? t : tau;
                return cdf_bright.y[i - k] * (-std::expm1(-arg / flip_time_ns));
            };
            integral += 0.5 * (grid[j + 1] - grid[j]) * (integrand(j) + integrand(j + 1));
        }
        e.y[i] = cdf_dark.y[i] + integral / t;
    }
    return e;
}

FidelityReport fidelity(const Curve& e_bright, const Curve& e_dark, double p_bright,
                        double p_dark) {
    if (e_bright.t != e_dark.t) {
        throw std::invalid_argument("fidelity: curves must share one grid");
    }
    if (std::abs(p_bright + p_dark - 1.0) > 1e-12) {
        throw std::invalid_argument("fidelity: occupancy must sum to 1");
    }
    FidelityReport report;
    report.readout_times = e_bright.t;
    report.e_bright = e_bright.y;
    report.e_dark = e_dark.y;
    report.p_bright = p_bright;
    report.p_dark = p_dark;
    report.fidelity.reserve(e_bright.y.size());
    std::size_t best = 0;
    for (std::size_t i = 0; i < e_bright.y.size(); ++i) {
        const double f = 1.0 - p_bright * e_bright.y[i] - p_dark * e_dark.y[i];
        report.fidelity.push_back(f);
        if (f > report.fidelity[best]) best = i;
    }
    report.optimal_time = report.readout_times[best];
    report.optimal_fidelity = report.fidelity[best];
    return report;
}

std::pair<Curve, Curve> empirical_errors(const TraceEnsemble& ensemble,
                                         const std::vector<double>& grid,
                                         ErrorAccounting accounting) {
    std::uint64_t n_bright = 0;
    std::uint64_t n_dark = 0;
    for (const DetectionRecord& rec : ensemble.records) {
        (rec.true_initial_spin == Spin::bright ? n_bright : n_dark) += 1;
    }
    if (n_bright == 0 || n_dark == 0) {
        throw std::invalid_argument("empirical_errors: empty conditional subset");
    }

    // A bright-projected repetition is read correctly on [click, inf) under
    // assignment accounting, and on [click, first bright->dark flip) under
    // state-aware accounting. Sorted interval endpoints turn the per-time
    // counts into binary searches.
    std::vector<double> correct_from;   // click times of bright-projected reps
    std::vector<double> correct_until;  // end of the correct interval (state_aware)
    std::vector<double> dark_clicks;    // click times of dark-projected reps
    correct_from.reserve(n_bright);
    correct_until.reserve(n_bright);
    dark_clicks.reserve(n_dark);
    for (const DetectionRecord& rec : ensemble.records) {
        if (rec.true_initial_spin == Spin::bright) {
            const double click = rec.detection_time ? *rec.detection_time : kInfinity;
            correct_from.push_back(click);
            if (accounting == ErrorAccounting::state_aware) {
                const double flip = rec.spin_flip_times.empty() ? kInfinity
                                                                : rec.spin_flip_times.front();
                correct_until.push_back(std::max(click, flip));
            }
        } else if (rec.detection_time) {
            dark_clicks.push_back(*rec.detection_time);
        }
    }
    std::sort(correct_from.begin(), correct_from.end());
    std::sort(correct_until.begin(), correct_until.end());
    std::sort(dark_clicks.begin(), dark_clicks.end());

    auto count_leq = [](const std::vector<double>& sorted, double t) {
        return static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), t) -
                                   sorted.begin());
    };

    Curve e_b;
    Curve e_d;
    e_b.t = grid;
    e_d.t = grid;
    for (double t : grid) {
        double correct = count_leq(correct_from, t);
        if (accounting == ErrorAccounting::state_aware) {
            correct -= count_leq(correct_until, t);
        }
        e_b.y.push_back(1.0 - correct / static_cast<double>(n_bright));
        e_d.y.push_back(count_leq(dark_clicks, t) / static_cast<double>(n_dark));
    }
    return {e_b, e_d};
}

FidelityReport fidelity_from_formulas(const ReadoutScenario& scenario,
                                      const FormulaOptions& options) {
    const std::vector<double> grid = time_grid(scenario.pulse_duration, options.grid_step);
    const DetectionCDF cdf = detection_cdf(scenario, grid);
    Curve bright_curve{cdf.grid, cdf.bright};
    Curve dark_curve{cdf.grid, cdf.dark};
    const double flip_time = 1.0 / scenario.bright_flip_rate(options.include_backaction);
    const Curve e_b = error_bright(bright_curve, flip_time);
    const Curve e_d = error_dark(bright_curve, dark_curve, scenario.flip_time_to_bright(),
                                 options.variant);
    return fidelity(e_b, e_d, scenario.p_bright, scenario.p_dark);
}

FidelityReport fidelity_from_ensemble(const TraceEnsemble& ensemble,
                                      const std::vector<double>& grid,
                                      ErrorAccounting accounting) {
    const auto [e_b, e_d] = empirical_errors(ensemble, grid, accounting);
    return fidelity(e_b, e_d, ensemble.scenario.p_bright, ensemble.scenario.p_dark);
}

void write_count_fraction_csv(const CountFractionCurve& curve, std::ostream& out) {
    out << "readout_time_ns,count_fraction\n";
    char buffer[80];
    for (std::size_t i = 0; i < curve.readout_times.size(); ++i) {
        std::snprintf(buffer, sizeof buffer, "%.9g,%.9g\n", curve.readout_times[i],
                      curve.fractions[i]);
        out << buffer;
    }
}

void write_fidelity_csv(const FidelityReport& report, std::ostream& out) {
    out << "t_ns,e_bright,e_dark,fidelity\n";
    char buffer[120];
    for (std::size_t i = 0; i < report.readout_times.size(); ++i) {
        std::snprintf(buffer, sizeof buffer, "%.9g,%.9g,%.9g,%.9g\n", report.readout_times[i],
                      report.e_bright[i], report.e_dark[i], report.fidelity[i]);
        out << buffer;
    }
}

}  // namespace spinshot
