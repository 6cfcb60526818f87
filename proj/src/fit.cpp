#include "spinshot/fit.hpp"

#include <cmath>
#include <stdexcept>

namespace spinshot {

bool solve_linear(std::vector<double>& a, std::vector<double>& b, std::size_t n) {
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t row = col + 1; row < n; ++row) {
            if (std::abs(a[row * n + col]) > std::abs(a[pivot * n + col])) pivot = row;
        }
        if (std::abs(a[pivot * n + col]) < 1e-300) return false;
        if (pivot != col) {
            for (std::size_t k = 0; k < n; ++k) std::swap(a[col * n + k], a[pivot * n + k]);
            std::swap(b[col], b[pivot]);
        }
        const double inv = 1.0 / a[col * n + col];
        for (std::size_t row = col + 1; row < n; ++row) {
            const double factor = a[row * n + col] * inv;
            if (factor == 0.0) continue;
            for (std::size_t k = col; k < n; ++k) a[row * n + k] -= factor * a[col * n + k];
            b[row] -= factor * b[col];
        }
    }
    for (std::size_t col = n; col-- > 0;) {
        double sum = b[col];
        for (std::size_t k = col + 1; k < n; ++k) sum -= a[col * n + k] * b[k];
        b[col] = sum / a[col * n + col];
    }
    return true;
}

namespace {

double sum_squared_residuals(const std::vector<double>& y, const FitModel& model,
                             const std::vector<double>& params) {
    double ssr = 0.0;
    double value = 0.0;
    std::vector<double> grad(params.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        model(i, params, value, grad);
        const double r = y[i] - value;
        ssr += r * r;
    }
    return ssr;
}

}  // namespace

FitResult levenberg_marquardt(const std::vector<double>& y, const FitModel& model,
                              std::vector<double> initial, int max_iterations) {
    const std::size_t np = initial.size();
    const std::size_t n = y.size();
    if (n < np) throw std::invalid_argument("fit: fewer samples than parameters");

    FitResult result;
    result.params = std::move(initial);
    double lambda = 1e-3;
    double ssr = sum_squared_residuals(y, model, result.params);

    std::vector<double> jtj(np * np);
    std::vector<double> jtr(np);
    std::vector<double> grad(np);

    for (int iter = 0; iter < max_iterations; ++iter) {
        result.iterations = iter + 1;
        std::fill(jtj.begin(), jtj.end(), 0.0);
        std::fill(jtr.begin(), jtr.end(), 0.0);
        double value = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            model(i, result.params, value, grad);
            const double r = y[i] - value;
            for (std::size_t a = 0; a < np; ++a) {
                jtr[a] += grad[a] * r;
                for (std::size_t b = a; b < np; ++b) jtj[a * np + b] += grad[a] * grad[b];
            }
        }
        for (std::size_t a = 0; a < np; ++a) {
            for (std::size_t b = 0; b < a; ++b) jtj[a * np + b] = jtj[b * np + a];
        }

        bool stepped = false;
        for (int attempt = 0; attempt < 32 && !stepped; ++attempt) {
            std::vector<double> damped = jtj;
            for (std::size_t a = 0; a < np; ++a) {
                damped[a * np + a] += lambda * (jtj[a * np + a] > 0 ? jtj[a * np + a] : 1.0);
            }
            std::vector<double> step = jtr;
            if (!solve_linear(damped, step, np)) {
                lambda *= 10.0;
                continue;
            }
            std::vector<double> trial = result.params;
            double rel_step = 0.0;
            for (std::size_t a = 0; a < np; ++a) {
                trial[a] += step[a];
                const double scale = std::max(std::abs(result.params[a]), 1e-30);
                rel_step = std::max(rel_step, std::abs(step[a]) / scale);
            }
            const double trial_ssr = sum_squared_residuals(y, model, trial);
            if (trial_ssr <= ssr) {
                result.params = std::move(trial);
                ssr = trial_ssr;
                lambda = std::max(lambda * 0.3, 1e-12);
                stepped = true;
                if (rel_step < 1e-10) {
                    result.converged = true;
                }
            } else {
                lambda *= 10.0;
            }
        }
        if (!stepped || result.converged) {
            result.converged = result.converged || !stepped;
            break;
        }
    }

    result.ssr = ssr;
    // Covariance from the final normal matrix, scaled by residual variance.
    result.covariance.assign(np * np, 0.0);
    if (n > np) {
        std::fill(jtj.begin(), jtj.end(), 0.0);
        double value = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            model(i, result.params, value, grad);
            for (std::size_t a = 0; a < np; ++a) {
                for (std::size_t b = a; b < np; ++b) jtj[a * np + b] += grad[a] * grad[b];
            }
        }
        for (std::size_t a = 0; a < np; ++a) {
            for (std::size_t b = 0; b < a; ++b) jtj[a * np + b] = jtj[b * np + a];
        }
        const double variance = ssr / static_cast<double>(n - np);
        // Invert by solving against unit vectors.
        for (std::size_t col = 0; col < np; ++col) {
            std::vector<double> a = jtj;
            std::vector<double> e(np, 0.0);
            e[col] = 1.0;
            if (solve_linear(a, e, np)) {
                for (std::size_t row = 0; row < np; ++row) {
                    result.covariance[row * np + col] = e[row] * variance;
                }
            }
        }
    }
    return result;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y,
                 const std::vector<double>& weights) {
    LineFit fit;
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n || (!weights.empty() && weights.size() != n)) {
        fit.degenerate = true;
        return fit;
    }
    auto weight = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };
    double sw = 0.0;
    double sx = 0.0;
    double sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sw += weight(i);
        sx += weight(i) * x[i];
        sy += weight(i) * y[i];
    }
    if (sw <= 0.0) {
        fit.degenerate = true;
        return fit;
    }
    const double mx = sx / sw;
    const double my = sy / sw;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += weight(i) * (x[i] - mx) * (x[i] - mx);
        sxy += weight(i) * (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0.0) {
        fit.degenerate = true;
        return fit;
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (fit.intercept + fit.slope * x[i]);
        ssr += weight(i) * r * r;
    }
    if (n > 2) {
        fit.slope_stderr = std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
    }
    return fit;
}

}  // namespace spinshot
