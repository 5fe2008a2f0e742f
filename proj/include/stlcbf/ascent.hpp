#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace stlcbf {

struct AscentOptions {
    int max_iterations = 20000;
    double gradient_tolerance = 1e-8;
    /// Feasible set is the ball |x| <= radius.
    double radius = std::numeric_limits<double>::infinity();
    double initial_step = 1.0;
    double armijo = 1e-4;
};

struct AscentResult {
    Eigen::VectorXd x;
    double value = 0.0;
    Eigen::VectorXd gradient;
    /// Norm of the projected gradient step P(x + g) - x.
    double gradient_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

inline Eigen::VectorXd project_to_ball(Eigen::VectorXd x, double radius) {
    const double n = x.norm();
    if (n > radius) x *= radius / n;
    return x;
}

/// Projected gradient ascent for a concave objective over a ball, with
/// Barzilai-Borwein trial steps and Armijo backtracking.
///
/// `fn(x)` returns {value, gradient}. Concavity makes any stationary point
/// global, so convergence is declared on the projected-gradient norm.
template <class Fn>
AscentResult maximize_concave(Fn&& fn, Eigen::VectorXd x, const AscentOptions& opt = {}) {
    x = project_to_ball(std::move(x), opt.radius);
    auto [v, g] = fn(x);
    double step = opt.initial_step;
    AscentResult res;
    auto pg_norm = [&](const Eigen::VectorXd& at, const Eigen::VectorXd& grad) {
        return (project_to_ball(at + grad, opt.radius) - at).norm();
    };
    double pg = pg_norm(x, g);
    int it = 0;
    for (; it < opt.max_iterations && pg > opt.gradient_tolerance; ++it) {
        bool accepted = false;
        for (int bt = 0; bt < 80; ++bt) {
            Eigen::VectorXd trial = project_to_ball(x + step * g, opt.radius);
            const Eigen::VectorXd s = trial - x;
            if (s.squaredNorm() == 0.0) break;
            auto [vt, gt] = fn(trial);
            const double slack = 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(v));
            if (std::isfinite(vt) && vt >= v + opt.armijo * g.dot(s) - slack) {
                const Eigen::VectorXd y = gt - g;
                const double curv = -s.dot(y);
                step = curv > 0.0 ? std::clamp(s.squaredNorm() / curv, 1e-12, 1e8) : std::min(step * 2.0, 1e8);
                x = std::move(trial);
                v = vt;
                g = std::move(gt);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        pg = pg_norm(x, g);
    }
    res.x = std::move(x);
    res.value = v;
    res.gradient = std::move(g);
    res.gradient_norm = pg;
    res.iterations = it;
    res.converged = pg <= opt.gradient_tolerance;
    return res;
}

}  // namespace stlcbf
