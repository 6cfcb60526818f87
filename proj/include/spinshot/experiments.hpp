#pragma once

#include <cstdint>
#include <string>

#include "spinshot/analysis.hpp"
#include "spinshot/core.hpp"

namespace spinshot {

inline constexpr const char* kToolVersion = "0.1.0";

/// IO failure while writing artifacts; maps to exit code 4.
class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct RunOptions {
    ReadoutScenario scenario;
    std::string scenario_name;  ///< preset name or config path, echoed in the manifest
    std::string experiment = "count_fraction";
    std::uint64_t seed = 1;
    std::string out_dir = ".";
    int threads = 0;
    double grid_step = 0.01;  ///< ns

    double duration_ms = 2.4;     ///< jump_train / cw_jumps / g2 acquisition span
    double tau_min = 12.0;        ///< two-pulse sweep, ns
    double tau_max = 400.0;
    int tau_points = 16;
    double power_saturation = 4.0;  ///< rate_equations drive strength
    double g2_bin_width = 10.0;     ///< ns
    double g2_max_delay = 1500.0;   ///< ns
    double cw_bin_width = 12.0;     ///< ns
    bool smooth_track = true;       ///< majority vote before dwell extraction
};

const std::vector<std::string>& experiment_names();

/// Executes one experiment end to end and writes manifest.json,
/// summary.json and the data CSVs into out_dir. All data files are
/// byte-stable for identical (scenario, experiment, seed, version); only
/// manifest.json carries a wall-clock timestamp.
void run_experiment(const RunOptions& options);

/// Prediction table for the improved-device presets, computed from seeded
/// ensembles and the empirical error curves.
struct Prediction {
    Preset preset;
    double optimal_time = 0.0;
    double optimal_fidelity = 0.0;
    double fidelity_at_3ns = 0.0;
    double fidelity_below_1ns = 0.0;  ///< best fidelity restricted to t < 1 ns
};
std::vector<Prediction> prediction_suite(std::uint64_t seed, std::uint64_t n_repetitions = 100000,
                                         int threads = 0);

}  // namespace spinshot
