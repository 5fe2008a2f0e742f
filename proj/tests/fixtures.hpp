#pragma once

#include "stlcbf/barrier.hpp"
#include "stlcbf/gamma.hpp"
#include "stlcbf/normalize.hpp"

#include <Eigen/Dense>

#include <random>
#include <vector>

namespace fixture {

using namespace stlcbf;

inline Eigen::VectorXd gaussian(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = g(rng);
    return v;
}

enum class Mix { affine, quad_ball, mixed };

/// Random barrier with `p` terms over R^dim, deadlines on {1,...,4} (the
/// first term always 4, so something is active on [0, 4)) and
/// funnels satisfying the gamma invariants.
inline CompositeBarrier random_barrier(std::mt19937_64& rng, Eigen::Index dim, int p, double eta, Mix mix,
                                       double bound_radius = 20.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> deadline(1, 4);
    std::vector<OperatorUnit> units;
    std::vector<GammaParams> params;
    for (int l = 0; l < p; ++l) {
        const bool ball = mix == Mix::quad_ball || (mix == Mix::mixed && u(rng) < 0.5);
        Predicate pred = ball ? Predicate::quad_ball(Eigen::MatrixXd::Identity(dim, dim) + 0.3 * Eigen::MatrixXd(gaussian(rng, dim * dim).reshaped(dim, dim)),
                                                     gaussian(rng, dim), 1.0 + 4.0 * u(rng))
                              : Predicate::affine(gaussian(rng, dim), gaussian(rng, 1)(0));
        const int b = l == 0 ? 4 : deadline(rng);
        const bool always = u(rng) < 0.5;
        const double a = always ? std::floor(b * u(rng)) : 0.0;
        OperatorUnit unit{always ? UnitKind::always : UnitKind::eventually, pred, Interval{a, static_cast<double>(b)}};
        const double ts = unit.critical_time();
        const double r = 0.2 * u(rng);
        const double g0 = ts > 0 ? -1.0 - 2.0 * u(rng) : r + 0.5 * u(rng);
        const double ginf = std::max(r, g0) + 0.1 + u(rng);
        params.push_back(make_gamma(g0, ginf, r, ts));
        units.push_back(std::move(unit));
    }
    return build_barrier(units, params, eta, bound_radius);
}

}  // namespace fixture
