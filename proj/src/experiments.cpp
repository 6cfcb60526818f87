#include "spinshot/experiments.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "spinshot/correlation.hpp"
#include "spinshot/jumps.hpp"
#include "spinshot/montecarlo.hpp"

namespace spinshot {

namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

Json scenario_to_json(const ReadoutScenario& s) {
    Json j;
    j["overall_efficiency"] = s.overall_efficiency;
    j["radiative_lifetime_ps"] = s.radiative_lifetime_ps;
    j["bare_decay_rate"] = s.bare_decay_rate;
    j["purcell_factor"] = s.purcell_factor;
    j["excited_population"] = s.excited_population;
    j["spin_flip_time"] = s.spin_flip_time == kInfinity ? Json("inf") : Json(s.spin_flip_time);
    if (s.spin_flip_time_on) j["spin_flip_time_on"] = *s.spin_flip_time_on;
    if (s.spin_flip_time_off) j["spin_flip_time_off"] = *s.spin_flip_time_off;
    j["branching_ratio"] =
        s.branching_ratio == kInfinity ? Json("inf") : Json(s.branching_ratio);
    j["leakage_prob_3ns"] = s.leakage_prob_3ns;
    j["detector_dead_time"] = s.detector_dead_time;
    j["pulse_duration"] = s.pulse_duration;
    j["pulse_repetition_time"] = s.pulse_repetition_time;
    j["n_repetitions"] = s.n_repetitions;
    j["p_bright"] = s.p_bright;
    j["p_dark"] = s.p_dark;
    j["geometry"] = std::string(to_string(s.geometry));
    j["rise_time"] = s.rise_time;
    return j;
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << content;
    if (!out) throw IoError("failed writing " + path.string());
}

template <typename Writer>
void write_with(const fs::path& path, Writer&& writer) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    writer(out);
    if (!out) throw IoError("failed writing " + path.string());
}

void write_manifest(const RunOptions& opt) {
    Json manifest;
    manifest["tool"] = "spinshot";
    manifest["version"] = kToolVersion;
    manifest["experiment"] = opt.experiment;
    manifest["scenario_name"] = opt.scenario_name;
    manifest["seed"] = opt.seed;
    manifest["out_dir"] = opt.out_dir;
    manifest["scenario"] = scenario_to_json(opt.scenario);
    const std::time_t now = std::time(nullptr);
    char stamp[32] = {0};
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    manifest["timestamp"] = stamp;
    write_text_file(fs::path(opt.out_dir) / "manifest.json", manifest.dump(2) + "\n");
}

void write_summary(const RunOptions& opt, Json results) {
    Json summary;
    summary["experiment"] = opt.experiment;
    summary["scenario"] = scenario_to_json(opt.scenario);
    summary["results"] = std::move(results);
    summary["provenance"] = {
        {"tool", "spinshot"}, {"version", kToolVersion}, {"seed", opt.seed},
        {"scenario_name", opt.scenario_name}};
    write_text_file(fs::path(opt.out_dir) / "summary.json", summary.dump(2) + "\n");
}

double value_at(const std::vector<double>& grid, const std::vector<double>& values, double t) {
    const auto it = std::lower_bound(grid.begin(), grid.end(), t - 1e-12);
    if (it == grid.end()) return values.back();
    return values[static_cast<std::size_t>(it - grid.begin())];
}

void run_count_fraction(const RunOptions& opt) {
    const TraceEnsemble ensemble = simulate_ensemble(opt.scenario, opt.seed, opt.threads);
    const std::vector<double> grid = time_grid(opt.scenario.pulse_duration, opt.grid_step);
    const CountFractionCurve curve = count_fraction(ensemble, grid);
    write_with(fs::path(opt.out_dir) / "count_fraction.csv",
               [&](std::ostream& out) { write_count_fraction_csv(curve, out); });
    write_with(fs::path(opt.out_dir) / "ensemble.csv",
               [&](std::ostream& out) { write_ensemble_csv(ensemble, out); });

    Json results;
    results["n_repetitions"] = curve.n_repetitions;
    results["final_fraction"] = curve.fractions.back();
    if (opt.scenario.pulse_duration >= 1.8) {
        results["fraction_at_1p8ns"] = value_at(curve.readout_times, curve.fractions, 1.8);
    }
    write_summary(opt, results);
}

void run_fidelity(const RunOptions& opt) {
    FormulaOptions fopt;
    fopt.grid_step = opt.grid_step;
    const FidelityReport report = fidelity_from_formulas(opt.scenario, fopt);
    write_with(fs::path(opt.out_dir) / "fidelity_report.csv",
               [&](std::ostream& out) { write_fidelity_csv(report, out); });
    Json results;
    results["optimal_time_ns"] = report.optimal_time;
    results["optimal_fidelity"] = report.optimal_fidelity;
    if (opt.scenario.pulse_duration >= 3.0) {
        results["fidelity_at_3ns"] = value_at(report.readout_times, report.fidelity, 3.0);
        results["e_bright_at_3ns"] = value_at(report.readout_times, report.e_bright, 3.0);
        results["e_dark_at_3ns"] = value_at(report.readout_times, report.e_dark, 3.0);
    }
    write_summary(opt, results);
}

void run_two_pulse_sweep(const RunOptions& opt) {
    std::vector<double> delays;
    std::vector<double> probabilities;
    std::string csv = "tau_ns,p_conditional,wilson_low,wilson_high,n_pairs\n";
    char buffer[160];
    for (int i = 0; i < opt.tau_points; ++i) {
        const double tau = opt.tau_min + (opt.tau_max - opt.tau_min) * static_cast<double>(i) /
                                             static_cast<double>(opt.tau_points - 1);
        const auto pairs = simulate_two_pulse(opt.scenario, tau, opt.seed + static_cast<std::uint64_t>(i),
                                              true, opt.threads);
        const ConditionalProbability cp = conditional_probability(pairs, true);
        delays.push_back(tau);
        probabilities.push_back(cp.p);
        std::snprintf(buffer, sizeof buffer, "%.9g,%.9g,%.9g,%.9g,%llu\n", tau, cp.p,
                      cp.wilson_low, cp.wilson_high,
                      static_cast<unsigned long long>(cp.n_condition));
        csv += buffer;
    }
    write_text_file(fs::path(opt.out_dir) / "two_pulse_sweep.csv", csv);

    const DecayFit fit = fit_conditional_decay(delays, probabilities);
    Json results;
    results["tau_fit_ns"] = fit.tau;
    results["tau_fit_error_ns"] = fit.tau_error;
    results["p0"] = fit.p0;
    results["p_inf"] = fit.p_inf;
    results["bounded"] = fit.bounded;
    results["p_at_min_delay"] = probabilities.front();
    write_summary(opt, results);
}

WaitingTimeHistogram track_to_waiting_times(const RunOptions& opt, StateTrack track,
                                            double hist_bin, Json& results) {
    if (opt.smooth_track) track = majority_smooth(track, 3);
    const std::vector<Dwell> dwells = dwell_times(track);
    const WaitingTimeHistogram hist = fit_waiting_times(dwells, hist_bin, track.bin_width);
    write_with(fs::path(opt.out_dir) / "track.csv",
               [&](std::ostream& out) { write_track_csv(track, out); });
    write_with(fs::path(opt.out_dir) / "waiting_times.csv",
               [&](std::ostream& out) { write_histogram_csv(hist, out); });
    results["n_dwells"] = dwells.size();
    results["mle_time_constant_ns"] = hist.mle_time_constant;
    results["mle_error_ns"] = hist.mle_error;
    results["lsq_time_constant_ns"] = hist.lsq_time_constant;
    results["smoothed"] = opt.smooth_track;
    return hist;
}

void run_jump_train(const RunOptions& opt) {
    const double duration_ns = opt.duration_ms * 1e6;
    const auto n_pulses =
        static_cast<std::uint64_t>(duration_ns / opt.scenario.pulse_repetition_time);
    const PulseTrainResult train = simulate_pulse_train(opt.scenario, n_pulses, opt.seed);
    Json results;
    results["n_pulses"] = n_pulses;
    track_to_waiting_times(opt, assign_states(train), 2.0 * opt.scenario.pulse_repetition_time,
                           results);
    write_summary(opt, results);
}

void run_cw_jumps(const RunOptions& opt) {
    const double duration_ns = opt.duration_ms * 1e6;
    const std::vector<double> clicks = simulate_cw_stream(opt.scenario, duration_ns, opt.seed);
    Json results;
    results["n_clicks"] = clicks.size();
    track_to_waiting_times(opt, assign_states_cw(clicks, duration_ns, opt.cw_bin_width),
                           2.0 * opt.cw_bin_width, results);
    write_summary(opt, results);
}

void run_g2(const RunOptions& opt) {
    const double duration_ns = opt.duration_ms * 1e6;
    const std::vector<double> clicks = simulate_cw_stream(opt.scenario, duration_ns, opt.seed);
    write_with(fs::path(opt.out_dir) / "timestamps.csv", [&](std::ostream& out) {
        char buffer[48];
        for (double t : clicks) {
            std::snprintf(buffer, sizeof buffer, "%.9g\n", t);
            out << buffer;
        }
    });
    const CorrelationCurve curve = g2_estimate(clicks, opt.g2_bin_width, opt.g2_max_delay);
    write_with(fs::path(opt.out_dir) / "g2.csv",
               [&](std::ostream& out) { write_correlation_csv(curve, out); });

    Json results;
    results["n_clicks"] = clicks.size();
    const double exclusion = 5.0 * opt.scenario.radiative_lifetime_ns() +
                             opt.scenario.detector_dead_time;
    try {
        const BunchingFit fit = bunching_fit(curve, exclusion);
        results["tau_on_ns"] = fit.tau_on;
        results["tau_off_ns"] = fit.tau_off;
        results["amplitude"] = fit.amplitude;
        results["converged"] = fit.converged;
    } catch (const std::runtime_error& e) {
        results["bunching"] = e.what();
    }
    write_summary(opt, results);
}

void run_rate_equations(const RunOptions& opt) {
    const RateModel model = RateModel::from_scenario(opt.scenario, opt.power_saturation);
    const SteadyState ss = rate_steady_state(model);
    std::vector<double> grid;
    const double span = 5.0 * std::max({1.0 / std::max(model.k_dark_to_bright, 1e-6),
                                        1.0 / model.total_decay()});
    for (int i = 0; i <= 400; ++i) grid.push_back(span * static_cast<double>(i) / 400.0);
    const CorrelationCurve curve = g2_from_rates(model, grid);
    write_with(fs::path(opt.out_dir) / "g2_model.csv",
               [&](std::ostream& out) { write_correlation_csv(curve, out); });

    Json results;
    results["saturation_parameter"] = opt.power_saturation;
    results["pump_rate_ns"] = model.pump_rate;
    results["ground_bright"] = ss.ground_bright;
    results["ground_dark"] = ss.ground_dark;
    results["excited"] = ss.excited;
    results["initialization_fidelity"] = ss.ground_dark;
    write_summary(opt, results);
}

void run_efficiency_budget(const RunOptions& opt) {
    Json results;
    auto entry = [](const EfficiencyBudget& b) {
        return Json{{"beta", b.beta},
                    {"kappa_top_fraction", b.kappa_top_fraction},
                    {"eta_optics", b.eta_optics},
                    {"eta_coupler", b.eta_coupler},
                    {"eta_detector", b.eta_detector},
                    {"overall_efficiency", overall_efficiency(b)}};
    };
    results["zero_field"] = entry(budget_zero_field());
    results["faraday_2t_predicted"] = entry(budget_faraday_2t_predicted());
    results["optimized"] = entry(budget_optimized());
    std::string csv = "budget,beta,kappa_top_fraction,eta_optics,eta_coupler,eta_detector,overall_efficiency\n";
    char buffer[200];
    for (const auto& [name, budget] :
         {std::pair<const char*, EfficiencyBudget>{"zero_field", budget_zero_field()},
          {"faraday_2t_predicted", budget_faraday_2t_predicted()},
          {"optimized", budget_optimized()}}) {
        std::snprintf(buffer, sizeof buffer, "%s,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", name,
                      budget.beta, budget.kappa_top_fraction, budget.eta_optics,
                      budget.eta_coupler, budget.eta_detector, overall_efficiency(budget));
        csv += buffer;
    }
    write_text_file(fs::path(opt.out_dir) / "efficiency_budget.csv", csv);
    write_summary(opt, results);
}

void run_prediction_suite(const RunOptions& opt) {
    const auto predictions =
        prediction_suite(opt.seed, opt.scenario.n_repetitions, opt.threads);
    Json results;
    std::string csv = "preset,optimal_time_ns,optimal_fidelity,fidelity_at_3ns,fidelity_below_1ns\n";
    char buffer[200];
    for (const Prediction& p : predictions) {
        const std::string name(to_string(p.preset));
        results[name] = {{"optimal_time_ns", p.optimal_time},
                         {"optimal_fidelity", p.optimal_fidelity},
                         {"fidelity_at_3ns", p.fidelity_at_3ns},
                         {"fidelity_below_1ns", p.fidelity_below_1ns}};
        std::snprintf(buffer, sizeof buffer, "%s,%.9g,%.9g,%.9g,%.9g\n", name.c_str(),
                      p.optimal_time, p.optimal_fidelity, p.fidelity_at_3ns,
                      p.fidelity_below_1ns);
        csv += buffer;
    }
    write_text_file(fs::path(opt.out_dir) / "predictions.csv", csv);
    write_summary(opt, results);
}

}  // namespace

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names = {
        "count_fraction", "fidelity",       "two_pulse_sweep",
        "jump_train",     "cw_jumps",       "g2",
        "rate_equations", "efficiency_budget", "prediction_suite"};
    return names;
}

void run_experiment(const RunOptions& options) {
    options.scenario.validate();
    std::error_code ec;
    fs::create_directories(options.out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + options.out_dir);
    write_manifest(options);

    const std::string& name = options.experiment;
    if (name == "count_fraction") run_count_fraction(options);
    else if (name == "fidelity") run_fidelity(options);
    else if (name == "two_pulse_sweep") run_two_pulse_sweep(options);
    else if (name == "jump_train") run_jump_train(options);
    else if (name == "cw_jumps") run_cw_jumps(options);
    else if (name == "g2") run_g2(options);
    else if (name == "rate_equations") run_rate_equations(options);
    else if (name == "efficiency_budget") run_efficiency_budget(options);
    else if (name == "prediction_suite") run_prediction_suite(options);
    else throw std::invalid_argument("unknown experiment: " + name);
}

std::vector<Prediction> prediction_suite(std::uint64_t seed, std::uint64_t n_repetitions,
                                         int threads) {
    std::vector<Prediction> predictions;
    std::uint64_t salt = 0;
    for (Preset preset : {Preset::optimized, Preset::voigt_present, Preset::voigt_optimized}) {
        ReadoutScenario s = scenario_preset(preset);
        s.n_repetitions = n_repetitions;
        const TraceEnsemble ensemble = simulate_ensemble(s, seed + salt++, threads);
        const std::vector<double> grid = time_grid(s.pulse_duration, 0.01);
        const FidelityReport report =
            fidelity_from_ensemble(ensemble, grid, ErrorAccounting::assignment);

        Prediction p;
        p.preset = preset;
        p.optimal_time = report.optimal_time;
        p.optimal_fidelity = report.optimal_fidelity;
        p.fidelity_at_3ns = report.fidelity.back();
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (grid[i] >= 3.0) {
                p.fidelity_at_3ns = report.fidelity[i];
                break;
            }
        }
        double best_below_1 = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (grid[i] < 1.0) best_below_1 = std::max(best_below_1, report.fidelity[i]);
        }
        p.fidelity_below_1ns = best_below_1;
        predictions.push_back(p);
    }
    return predictions;
}

}  // namespace spinshot
