#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "spinshot/core.hpp"
#include "spinshot/experiments.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spinshot: pulsed single-shot spin-readout simulator and analysis toolkit"};

    std::string config = "Faraday2T";
    std::string experiment = "count_fraction";
    std::string out_dir = "out";
    std::uint64_t seed = 1;
    std::uint64_t reps = 0;
    double grid_step_ps = 10.0;
    int threads = 0;
    spinshot::RunOptions opt;

    app.add_option("-c,--config", config,
                   "Scenario: preset name (ZeroField, Faraday2T, Optimized, VoigtPresent, "
                   "VoigtOptimized) or path to a key = value config file")
        ->envname("SPINSHOT_CONFIG");
    app.add_option("-e,--experiment", experiment,
                   "One of: count_fraction, fidelity, two_pulse_sweep, jump_train, cw_jumps, "
                   "g2, rate_equations, efficiency_budget, prediction_suite")
        ->envname("SPINSHOT_EXPERIMENT");
    app.add_option("-s,--seed", seed, "Master seed")->envname("SPINSHOT_SEED");
    app.add_option("-o,--out", out_dir, "Output directory")->envname("SPINSHOT_OUT");
    app.add_option("--reps", reps, "Override the scenario repetition count")
        ->envname("SPINSHOT_REPS");
    app.add_option("--grid-step-ps", grid_step_ps, "Analysis grid step in ps")
        ->envname("SPINSHOT_GRID_STEP_PS");
    app.add_option("--threads", threads, "Worker threads (0 = hardware)")
        ->envname("SPINSHOT_THREADS");
    app.add_option("--duration-ms", opt.duration_ms,
                   "Acquisition span for jump_train / cw_jumps / g2 (ms)")
        ->envname("SPINSHOT_DURATION_MS");
    app.add_option("--tau-min", opt.tau_min, "Two-pulse sweep start delay (ns)");
    app.add_option("--tau-max", opt.tau_max, "Two-pulse sweep end delay (ns)");
    app.add_option("--tau-points", opt.tau_points, "Two-pulse sweep points");
    app.add_option("--power", opt.power_saturation, "Drive power over saturation (rate_equations)");
    app.add_option("--g2-bin", opt.g2_bin_width, "g2 histogram bin width (ns)");
    app.add_option("--g2-max-delay", opt.g2_max_delay, "g2 maximum delay (ns)");
    app.add_option("--cw-bin", opt.cw_bin_width, "CW state-assignment bin (ns)");
    app.add_flag("--no-smoothing{false},--smoothing{true}", opt.smooth_track,
                 "Majority-vote smoothing before dwell extraction (default on)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        opt.scenario = spinshot::resolve_scenario(config);
        if (reps > 0) opt.scenario.n_repetitions = reps;
        opt.scenario_name = config;
        opt.experiment = experiment;
        opt.seed = seed;
        opt.out_dir = out_dir;
        opt.threads = threads;
        opt.grid_step = grid_step_ps * 1e-3;
        spinshot::run_experiment(opt);
    } catch (const spinshot::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    } catch (const spinshot::IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return kExitIo;
    } catch (const std::runtime_error& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return kExitNumerical;
    }
    return kExitOk;
}
