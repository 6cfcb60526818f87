#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

namespace spinshot {

/// Result of a damped least-squares fit.
struct FitResult {
    std::vector<double> params;
    std::vector<double> covariance;  ///< row-major p x p, scaled by residual variance
    double ssr = 0.0;                ///< sum of squared residuals at the optimum
    int iterations = 0;
    bool converged = false;
};

/// Model callback: fill `value` and the per-parameter derivatives for
/// sample i given params.
using FitModel = std::function<void(std::size_t i, const std::vector<double>& params,
                                    double& value, std::vector<double>& gradient)>;

/// Damped normal-equation (Levenberg-Marquardt style) least squares with
/// analytic Jacobians. Stops when the relative step drops below 1e-10 or
/// after max_iterations.
FitResult levenberg_marquardt(const std::vector<double>& y, const FitModel& model,
                              std::vector<double> initial, int max_iterations = 200);

/// Weighted linear regression y ~ a + b x. Degenerate when x has no
/// spread. An empty weight vector means uniform weights.
struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
    double slope_stderr = 0.0;
    bool degenerate = false;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y,
                 const std::vector<double>& weights = {});

/// Solve the n x n system a x = b in place by Gaussian elimination with
/// partial pivoting. Returns false if singular.
bool solve_linear(std::vector<double>& a, std::vector<double>& b, std::size_t n);

}  // namespace spinshot
