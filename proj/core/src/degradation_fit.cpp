#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pdm/cmapss.hpp"
#include "pdm/error.hpp"

namespace pdm::cmapss {

double degradation_curve(double a, double b, double d, double t) {
    return 1.0 - d - std::exp(a * std::pow(t, b));
}

double linear_fit_sse(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n < 2) return 0.0;
    const double nd = static_cast<double>(n);
    const double mt = (nd + 1.0) / 2.0;  // t = 1..n
    const double my = std::accumulate(values.begin(), values.end(), 0.0) / nd;
    double stt = 0.0, sty = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dt = static_cast<double>(i + 1) - mt;
        stt += dt * dt;
        sty += dt * (values[i] - my);
    }
    const double slope = sty / stt;
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = values[i] - my - slope * (static_cast<double>(i + 1) - mt);
        sse += r * r;
    }
    return sse;
}

namespace {

// Internally the curve is parameterized on u = t / n as
//   f(u) = 1 - d - exp(c * u^b),  c = a * n^b,
// which keeps all three parameters O(1) for any trajectory length.
struct Params {
    double c = 0.0;
    double b = 1.0;
    double d = 0.0;
};

class CurveProblem {
public:
    explicit CurveProblem(std::span<const double> y) : y_(y), u_(y.size()), log_u_(y.size()) {
        const double n = static_cast<double>(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) {
            u_[i] = static_cast<double>(i + 1) / n;
            log_u_[i] = std::log(u_[i]);
        }
    }

    std::size_t size() const { return y_.size(); }

    // Best d for fixed (c, b): mean of (1 - exp(c u^b) - y).
    double optimal_d(double c, double b) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < y_.size(); ++i) acc += 1.0 - std::exp(c * std::pow(u_[i], b)) - y_[i];
        return acc / static_cast<double>(y_.size());
    }

    double sse(const Params& p) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < y_.size(); ++i) {
            const double f = 1.0 - p.d - std::exp(p.c * std::pow(u_[i], p.b));
            const double r = y_[i] - f;
            acc += r * r;
        }
        return std::isfinite(acc) ? acc : std::numeric_limits<double>::infinity();
    }

    // Normal equations J^T J and J^T r for residual r = y - f.
    bool linearize(const Params& p, Eigen::Matrix3d& jtj, Eigen::Vector3d& jtr) const {
        jtj.setZero();
        jtr.setZero();
        for (std::size_t i = 0; i < y_.size(); ++i) {
            const double ub = std::pow(u_[i], p.b);
            const double e = std::exp(p.c * ub);
            const double r = y_[i] - (1.0 - p.d - e);
            // d f / d(c, b, d)
            const Eigen::Vector3d g(-ub * e, -p.c * ub * log_u_[i] * e, -1.0);
            jtj.noalias() += g * g.transpose();
            jtr.noalias() += g * r;
        }
        return jtj.allFinite() && jtr.allFinite();
    }

private:
    std::span<const double> y_;
    std::vector<double> u_;
    std::vector<double> log_u_;
};

Params levenberg_marquardt(const CurveProblem& problem, Params p, const FitOptions& options, double& sse) {
    sse = problem.sse(p);
    double lambda = 1e-3;
    for (int iter = 0; iter < options.max_iterations; ++iter) {
        Eigen::Matrix3d jtj;
        Eigen::Vector3d jtr;
        if (!problem.linearize(p, jtj, jtr)) break;

        bool improved = false;
        for (int attempt = 0; attempt < 30; ++attempt) {
            Eigen::Matrix3d damped = jtj;
            for (int k = 0; k < 3; ++k) damped(k, k) += lambda * std::max(jtj(k, k), 1e-12);
            // r = y - f, J = df/dp: minimizing |r - J s|^2 gives (J^T J) s = J^T r.
            const Eigen::Vector3d step = damped.ldlt().solve(jtr);
            if (!step.allFinite()) {
                lambda *= 10.0;
                continue;
            }
            const Params trial{p.c + step(0), p.b + step(1), p.d + step(2)};
            const double trial_sse = problem.sse(trial);
            if (trial_sse < sse) {
                const double gain = sse - trial_sse;
                p = trial;
                sse = trial_sse;
                lambda = std::max(lambda / 10.0, 1e-15);
                improved = true;
                if (gain <= options.tolerance * (1.0 + sse) && step.norm() < 1e-12 * (1.0 + std::abs(p.c))) {
                    return p;
                }
                break;
            }
            lambda *= 10.0;
            if (lambda > 1e16) break;
        }
        if (!improved) break;
    }
    return p;
}

}  // namespace

DegradationFit fit_degradation_model(const HealthTrajectory& health, const FitOptions& options) {
    const auto& y = health.health;
    if (y.size() < options.min_length) {
        throw UsageError("fit_degradation_model: unit " + std::to_string(health.unit_id) + " has " +
                         std::to_string(y.size()) + " cycles; need at least " +
                         std::to_string(options.min_length));
    }
    if (!std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); })) {
        throw NumericError("fit_degradation_model: non-finite health values in unit " +
                           std::to_string(health.unit_id));
    }

    const CurveProblem problem(y);

    // Coarse multi-start over (b, total decay); d is profiled out exactly.
    struct Start {
        Params p;
        double sse;
    };
    std::vector<Start> starts;
    {
        Params flat{0.0, 1.0, problem.optimal_d(0.0, 1.0)};
        starts.push_back({flat, problem.sse(flat)});
    }
    for (double b : options.b_grid) {
        for (double decay : options.decay_grid) {
            for (double sign : {1.0, -1.0}) {
                Params p{sign * decay, b, 0.0};
                p.d = problem.optimal_d(p.c, p.b);
                starts.push_back({p, problem.sse(p)});
            }
        }
    }
    std::sort(starts.begin(), starts.end(), [](const Start& x, const Start& y) { return x.sse < y.sse; });

    Params best = starts.front().p;
    double best_sse = starts.front().sse;
    const std::size_t refine = std::min<std::size_t>(starts.size(), static_cast<std::size_t>(options.refine_starts));
    for (std::size_t k = 0; k < refine; ++k) {
        double sse = 0.0;
        const Params p = levenberg_marquardt(problem, starts[k].p, options, sse);
        if (sse < best_sse) {
            best = p;
            best_sse = sse;
        }
    }
    // The flat start is always refined too; it anchors the degenerate case.
    {
        double sse = 0.0;
        const Params p = levenberg_marquardt(problem, Params{0.0, 1.0, problem.optimal_d(0.0, 1.0)}, options, sse);
        if (sse < best_sse) {
            best = p;
            best_sse = sse;
        }
    }

    const double n = static_cast<double>(y.size());
    DegradationFit fit;
    fit.b = best.b;
    fit.a = best.c / std::pow(n, best.b);
    fit.d = best.d;
    fit.residual_sse = best_sse;
    fit.degenerate = std::abs(best.c) < 1e-6;
    if (fit.degenerate) {
        fit.a = 0.0;
        fit.d = -std::accumulate(y.begin(), y.end(), 0.0) / n;  // H = 1 - d - 1 = mean
        fit.residual_sse = problem.sse(Params{0.0, best.b, fit.d});
    }
    return fit;
}

}  // namespace pdm::cmapss
