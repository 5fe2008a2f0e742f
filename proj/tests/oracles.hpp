#pragma once

// Independent reference implementations used by the tests and the
// acceptance binary. Deliberately naive: linear scans, no shared helpers
// with the library beyond the AST and predicate types.

#include "stlcbf/formula.hpp"
#include "stlcbf/layout.hpp"
#include "stlcbf/robustness.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

using namespace stlcbf;

/// Sample indices whose time lies in [lo, hi]; if none, the samples just
/// before and just after the window.
inline std::vector<std::size_t> window_indices(const SampledSignal& s, double lo, double hi) {
    const double eps = 1e-9 * std::max(1.0, std::abs(hi));
    std::vector<std::size_t> in;
    for (std::size_t i = 0; i < s.times.size(); ++i)
        if (s.times[i] >= lo - eps && s.times[i] <= hi + eps) in.push_back(i);
    if (!in.empty()) return in;
    std::size_t before = 0, after = s.times.size() - 1;
    bool has_before = false, has_after = false;
    for (std::size_t i = 0; i < s.times.size(); ++i) {
        if (s.times[i] < lo) before = i, has_before = true;
        if (s.times[i] > hi && !has_after) after = i, has_after = true;
    }
    if (has_before) in.push_back(before);
    if (has_after) in.push_back(after);
    return in;
}

inline double robustness(const Formula& f, const SampledSignal& s, std::size_t k,
                         UntilSemantics sem = UntilSemantics::window_start) {
    const double inf = std::numeric_limits<double>::infinity();
    const double t = s.times[k];
    switch (f.kind()) {
        case NodeKind::top: return inf;
        case NodeKind::literal: return f.predicate().value(s.states[k]);
        case NodeKind::conjunction: {
            double v = inf;
            for (const auto& c : f.children()) v = std::min(v, robustness(c, s, k, sem));
            return v;
        }
        case NodeKind::always: {
            double v = inf;
            for (auto i : window_indices(s, t + f.interval().lo, t + f.interval().hi))
                v = std::min(v, robustness(f.children()[0], s, i, sem));
            return v;
        }
        case NodeKind::eventually: {
            double v = -inf;
            for (auto i : window_indices(s, t + f.interval().lo, t + f.interval().hi))
                v = std::max(v, robustness(f.children()[0], s, i, sem));
            return v;
        }
        case NodeKind::until: {
            const auto w = window_indices(s, t + f.interval().lo, t + f.interval().hi);
            const std::size_t from = sem == UntilSemantics::window_start ? w.front() : k;
            double v = -inf;
            for (auto i : w) {
                double lhs = inf;
                for (std::size_t j = from; j <= i; ++j) lhs = std::min(lhs, robustness(f.children()[0], s, j, sem));
                v = std::max(v, std::min(robustness(f.children()[1], s, i, sem), lhs));
            }
            return v;
        }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

/// Random literal over the stacked state. `increasing` keeps every
/// coefficient positive so larger states give larger predicate values.
inline Formula random_literal(std::mt19937_64& rng, const StateLayout& lay, bool allow_negation, bool increasing) {
    std::uniform_real_distribution<double> u(-1, 1);
    Eigen::VectorXd c(lay.total());
    for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = increasing ? 0.1 + std::abs(u(rng)) : u(rng);
    auto p = Predicate::affine(c, u(rng));
    if (allow_negation && std::bernoulli_distribution(0.3)(rng)) p = p.negated();
    return Formula::literal(p);
}

inline Formula random_state_formula(std::mt19937_64& rng, const StateLayout& lay, bool allow_negation, bool increasing) {
    const int n = std::uniform_int_distribution<int>(0, 3)(rng);
    if (n == 0) return Formula::top();
    std::vector<Formula> lits;
    for (int i = 0; i < n; ++i) lits.push_back(random_literal(rng, lay, allow_negation, increasing));
    return Formula::conjunction(std::move(lits));
}

/// Conjunction of 1-3 G/F/U operators over random state formulas with
/// windows inside [0, max_hi]; endpoints on a 0.05 grid so some windows
/// fall between samples.
inline Formula random_task_formula(std::mt19937_64& rng, const StateLayout& lay, double max_hi,
                                   bool allow_negation = true, bool increasing = false) {
    std::uniform_int_distribution<int> grid(0, static_cast<int>(max_hi / 0.05));
    std::vector<Formula> ops;
    const int n = std::uniform_int_distribution<int>(1, 3)(rng);
    for (int i = 0; i < n; ++i) {
        int a = grid(rng), b = grid(rng);
        if (a > b) std::swap(a, b);
        const Interval iv{0.05 * a, 0.05 * b};
        switch (std::uniform_int_distribution<int>(0, 2)(rng)) {
            case 0: ops.push_back(Formula::always(iv, random_state_formula(rng, lay, allow_negation, increasing))); break;
            case 1: ops.push_back(Formula::eventually(iv, random_state_formula(rng, lay, allow_negation, increasing))); break;
            default:
                ops.push_back(Formula::until(iv, random_state_formula(rng, lay, allow_negation, increasing),
                                             random_state_formula(rng, lay, allow_negation, increasing)));
        }
    }
    return Formula::conjunction(std::move(ops));
}

inline SampledSignal random_signal(std::mt19937_64& rng, const StateLayout& lay, int samples, double dt) {
    std::normal_distribution<double> g(0.0, 1.0);
    SampledSignal s;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(lay.total());
    for (int k = 0; k < samples; ++k) {
        for (Eigen::Index i = 0; i < x.size(); ++i) x(i) += 0.5 * g(rng);
        s.times.push_back(dt * k);
        s.states.push_back(x);
    }
    return s;
}

/// Min-norm point of {u : a^T u >= rhs} by brute force over candidates.
inline bool beats_random_candidates(std::mt19937_64& rng, const Eigen::VectorXd& a, double rhs, const Eigen::VectorXd& u,
                                    int candidates) {
    std::normal_distribution<double> g(0.0, 1.0);
    const double un = u.norm();
    for (int c = 0; c < candidates; ++c) {
        Eigen::VectorXd v(a.size());
        for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = 3.0 * (std::abs(rhs) + 1.0) / (a.norm() + 1e-3) * g(rng);
        if (a.dot(v) < rhs) continue;
        if (v.norm() < un - 1e-12) return false;
    }
    return true;
}

}  // namespace oracle
