#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace spinshot {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class Geometry { faraday, voigt };
enum class Spin : std::uint8_t { bright, dark };
enum class ClickSource : std::uint8_t { emitter, leakage };

inline Spin flipped(Spin s) { return s == Spin::bright ? Spin::dark : Spin::bright; }

std::string_view to_string(Geometry g);
std::string_view to_string(Spin s);
std::string_view to_string(ClickSource s);

/// Chain of independent loss factors between exciton creation and a
/// detector click.
struct EfficiencyBudget {
    double beta = 1.0;                ///< exciton -> photon in the collected cavity mode
    double kappa_top_fraction = 1.0;  ///< photon leaves through the top mirror
    double eta_optics = 1.0;          ///< cavity output to fibre output
    double eta_coupler = 1.0;         ///< fibre to detector coupling
    double eta_detector = 1.0;        ///< detector quantum efficiency
};

/// Product of all budget factors. Throws std::domain_error if any factor
/// is outside [0, 1].
double overall_efficiency(const EfficiencyBudget& budget);

/// Poisson rate (ns^-1) such that P(at least one event in `window_ns`)
/// equals `prob_in_window`. Throws std::domain_error for prob >= 1 or a
/// non-positive window.
double leakage_rate_from_window(double prob_in_window, double window_ns);

/// Full parameter set of one readout configuration. Times in ns except the
/// radiative lifetime, which is carried in ps.
struct ReadoutScenario {
    double overall_efficiency = 0.37;     ///< exciton -> click probability
    double radiative_lifetime_ps = 79.0;  ///< Purcell-enhanced bright lifetime
    double bare_decay_rate = 0.3;         ///< GHz, informational only
    double purcell_factor = 8.5;
    double excited_population = 0.5;      ///< steady-state exciton occupation while driven
    double spin_flip_time = kInfinity;    ///< ns, symmetric co-tunneling flip time
    std::optional<double> spin_flip_time_on;   ///< asymmetric override, bright dwell
    std::optional<double> spin_flip_time_off;  ///< asymmetric override, dark dwell
    double branching_ratio = kInfinity;   ///< spin-conserving over spin-nonconserving decay
    double leakage_prob_3ns = 0.0;        ///< P(laser-leakage click) within a 3 ns window
    double detector_dead_time = 12.0;     ///< ns
    double pulse_duration = 2.0;          ///< ns
    double pulse_repetition_time = 100.0; ///< ns
    std::uint64_t n_repetitions = 100000;
    double p_bright = 0.5;
    double p_dark = 0.5;
    Geometry geometry = Geometry::faraday;
    double rise_time = 0.0;               ///< ns; 0 means instantaneous drive turn-on

    double radiative_lifetime_ns() const { return radiative_lifetime_ps * 1e-3; }

    /// Photon emission rate while the spin is bright (ns^-1).
    double emission_rate() const { return excited_population / radiative_lifetime_ns(); }

    /// Click rate from the emitter alone: emission rate times efficiency.
    double detection_rate() const { return overall_efficiency * emission_rate(); }

    /// Laser-leakage click rate during the pulse (ns^-1).
    double leakage_rate() const { return leakage_rate_from_window(leakage_prob_3ns, 3.0); }

    /// Mean bright dwell before a co-tunneling flip.
    double flip_time_to_dark() const { return spin_flip_time_on.value_or(spin_flip_time); }
    /// Mean dark dwell before a co-tunneling flip.
    double flip_time_to_bright() const { return spin_flip_time_off.value_or(spin_flip_time); }

    /// Readout-induced flip rate: one flip per branching_ratio+1 emissions.
    double backaction_flip_rate() const {
        if (!(branching_ratio < kInfinity)) return 0.0;
        return emission_rate() / (branching_ratio + 1.0);
    }

    /// Total rate of leaving the bright state while driven. With
    /// include_backaction the per-emission flip channel is added to the
    /// co-tunneling rate.
    double bright_flip_rate(bool include_backaction) const {
        double rate = 1.0 / flip_time_to_dark();
        if (include_backaction) rate += backaction_flip_rate();
        return rate;
    }

    /// Throws std::invalid_argument if any invariant is violated.
    void validate() const;
};

enum class Preset { zero_field, faraday_2t, optimized, voigt_present, voigt_optimized };

ReadoutScenario scenario_preset(Preset preset);
Preset preset_from_name(std::string_view name);  ///< throws std::invalid_argument
std::string_view to_string(Preset preset);
const std::vector<Preset>& all_presets();

/// Named factor sets behind the preset efficiencies.
EfficiencyBudget budget_zero_field();
EfficiencyBudget budget_faraday_2t_predicted();
EfficiencyBudget budget_optimized();

/// One repetition of the readout pulse with ground truth attached.
struct DetectionRecord {
    std::uint64_t repetition_index = 0;
    std::optional<double> detection_time;  ///< ns relative to pulse start
    ClickSource source = ClickSource::emitter;
    Spin true_initial_spin = Spin::bright;
    std::vector<double> spin_flip_times;   ///< within-pulse flips, alternating from initial
};

/// Fraction of repetitions with at least one detection, versus the
/// software-defined readout duration.
struct CountFractionCurve {
    std::vector<double> readout_times;
    std::vector<double> fractions;
    std::uint64_t n_repetitions = 0;
};

/// Config-file parse failure with position information.
class ConfigError : public std::runtime_error {
  public:
    ConfigError(int line, int column, const std::string& message);
    int line() const { return line_; }
    int column() const { return column_; }

  private:
    int line_;
    int column_;
};

/// Reads a `key = value` scenario file. Unknown keys and malformed lines
/// raise ConfigError with line/column. '#' starts a comment.
ReadoutScenario load_scenario(std::istream& in);
ReadoutScenario load_scenario_file(const std::string& path);
void save_scenario(const ReadoutScenario& s, std::ostream& out);

/// Accepts either a preset name or a path to a config file.
ReadoutScenario resolve_scenario(const std::string& name_or_path);

}  // namespace spinshot
