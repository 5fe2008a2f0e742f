#pragma once

#include "stlcbf/error.hpp"
#include "stlcbf/gamma.hpp"
#include "stlcbf/normalize.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace stlcbf {

/// b_l(x, t) = h_l(x) - gamma_l(t), active while t < deadline.
struct BarrierTerm {
    OperatorUnit unit;
    GammaParams gamma;
    /// Finite stand-in for sup h_l used by the gain bound; +inf if unknown.
    double h_cap = std::numeric_limits<double>::infinity();

    double deadline() const noexcept { return unit.deadline(); }
    double value(const Eigen::Ref<const Eigen::VectorXd>& x, double t) const {
        return unit.predicate.value(x) - gamma_eval(gamma, t);
    }
};

/// Value and derivatives of the composite barrier at one (x, t).
struct BarrierEval {
    double value = 0.0;
    Eigen::VectorXd grad_x;
    double dbdt = 0.0;
    /// Softmin weight per task term (0 when inactive); sums with
    /// `bound_weight` to one.
    std::vector<double> weights;
    double bound_weight = 0.0;
};

/// Smoothing of |x| in the bound term so its gradient exists at x = 0.
inline constexpr double kBoundSmoothing = 1e-9;

/// Composite time-varying barrier
///
///   b(x, t) = -(1/eta) ln( sum_l o_l(t) exp(-eta b_l(x, t)) + exp(-eta (D - |x|)) )
///
/// with o_l(t) = 1 iff t < deadline_l. Immutable once built.
class CompositeBarrier {
public:
    CompositeBarrier() = default;

    CompositeBarrier(std::vector<BarrierTerm> terms, double eta, double bound_radius)
        : terms_(std::move(terms)), eta_(eta), bound_radius_(bound_radius) {
        if (terms_.empty()) throw std::invalid_argument("barrier needs at least one term");
        if (!(eta_ > 0.0)) throw std::invalid_argument("barrier: eta must be positive");
        if (!(bound_radius_ >= 0.0)) throw std::invalid_argument("barrier: bound radius must be non-negative");
        dim_ = terms_.front().unit.predicate.dim();
        for (const auto& t : terms_) {
            if (t.unit.predicate.dim() != dim_) throw std::invalid_argument("barrier terms differ in state dimension");
            if (!(t.gamma.gamma0 < t.gamma.gamma_inf)) throw std::invalid_argument("barrier: need gamma0 < gamma_inf");
            if (t.gamma.decay < 0.0) throw std::invalid_argument("barrier: decay must be non-negative");
            if (t.deadline() > 0.0) schedule_.push_back(t.deadline());
        }
        std::sort(schedule_.begin(), schedule_.end());
        schedule_.erase(std::unique(schedule_.begin(), schedule_.end()), schedule_.end());
    }

    const std::vector<BarrierTerm>& terms() const noexcept { return terms_; }
    double eta() const noexcept { return eta_; }
    double bound_radius() const noexcept { return bound_radius_; }
    Eigen::Index dim() const noexcept { return dim_; }

    /// Switch instants s_1 < ... < s_q (s_0 = 0 implied).
    const std::vector<double>& schedule() const noexcept { return schedule_; }
    double horizon() const noexcept { return schedule_.empty() ? 0.0 : schedule_.back(); }

    bool active(std::size_t l, double t) const { return t < terms_[l].deadline(); }

    std::size_t active_count(double t) const {
        return static_cast<std::size_t>(
            std::count_if(terms_.begin(), terms_.end(), [t](const BarrierTerm& b) { return t < b.deadline(); }));
    }

    /// Smallest deadline strictly after t, +inf if none.
    double next_switch(double t) const {
        auto it = std::upper_bound(schedule_.begin(), schedule_.end(), t);
        return it == schedule_.end() ? std::numeric_limits<double>::infinity() : *it;
    }

    double value(const Eigen::Ref<const Eigen::VectorXd>& x, double t) const {
        return evaluate(x, t, [&](std::size_t l) { return active(l, t); }, false).value;
    }

    BarrierEval gradients(const Eigen::Ref<const Eigen::VectorXd>& x, double t) const {
        return evaluate(x, t, [&](std::size_t l) { return active(l, t); }, true);
    }

    /// lim_{tau -> s^-} b(x, tau): terms with deadline s are still present.
    double left_limit_value(const Eigen::Ref<const Eigen::VectorXd>& x, double s) const {
        return left_limit(x, s).value;
    }

    BarrierEval left_limit(const Eigen::Ref<const Eigen::VectorXd>& x, double s, bool with_gradient = true) const {
        return evaluate(x, s, [&](std::size_t l) { return terms_[l].deadline() >= s; }, with_gradient);
    }

    double bound_value(const Eigen::Ref<const Eigen::VectorXd>& x) const {
        return bound_radius_ - std::sqrt(x.squaredNorm() + kBoundSmoothing * kBoundSmoothing) + kBoundSmoothing;
    }

private:
    template <class ActiveFn>
    BarrierEval evaluate(const Eigen::Ref<const Eigen::VectorXd>& x, double t, ActiveFn is_active,
                         bool with_gradient) const {
        if (x.size() != dim_) throw std::invalid_argument("barrier: state dimension mismatch");
        const std::size_t p = terms_.size();
        std::vector<double> vals(p, std::numeric_limits<double>::infinity());
        bool any = false;
        double vmin = bound_value(x);
        const double vbound = vmin;
        for (std::size_t l = 0; l < p; ++l) {
            if (!is_active(l)) continue;
            any = true;
            vals[l] = terms_[l].value(x, t);
            vmin = std::min(vmin, vals[l]);
        }
        if (!any) throw BarrierError("no active barrier term at t=" + std::to_string(t));

        // max-shifted log-sum-exp
        BarrierEval out;
        out.weights.assign(p, 0.0);
        double sum = 0.0;
        for (std::size_t l = 0; l < p; ++l) {
            if (!is_active(l)) continue;
            out.weights[l] = std::exp(-eta_ * (vals[l] - vmin));
            sum += out.weights[l];
        }
        out.bound_weight = std::exp(-eta_ * (vbound - vmin));
        sum += out.bound_weight;
        out.value = vmin - std::log(sum) / eta_;
        if (!with_gradient) {
            out.weights.clear();
            return out;
        }

        for (auto& w : out.weights) w /= sum;
        out.bound_weight /= sum;
        out.grad_x = Eigen::VectorXd::Zero(dim_);
        for (std::size_t l = 0; l < p; ++l) {
            if (out.weights[l] == 0.0) continue;
            out.grad_x += out.weights[l] * terms_[l].unit.predicate.gradient(x);
            out.dbdt -= out.weights[l] * gamma_rate(terms_[l].gamma, t);
        }
        if (out.bound_weight > 0.0)
            out.grad_x -= out.bound_weight / std::sqrt(x.squaredNorm() + kBoundSmoothing * kBoundSmoothing) * x;
        return out;
    }

    std::vector<BarrierTerm> terms_;
    double eta_ = 1.0;
    double bound_radius_ = 0.0;
    Eigen::Index dim_ = 0;
    std::vector<double> schedule_;
};

/// Pair each unit with its funnel parameters (t_star must match the unit's
/// critical time) and append the bound term of radius D.
inline CompositeBarrier build_barrier(const std::vector<OperatorUnit>& units, const std::vector<GammaParams>& params,
                                      double eta, double bound_radius, const std::vector<double>& h_caps = {}) {
    if (units.empty()) throw std::invalid_argument("build_barrier: empty unit list");
    if (params.size() != units.size()) throw std::invalid_argument("build_barrier: one GammaParams per unit");
    if (!h_caps.empty() && h_caps.size() != units.size())
        throw std::invalid_argument("build_barrier: one h cap per unit");
    std::vector<BarrierTerm> terms;
    terms.reserve(units.size());
    for (std::size_t l = 0; l < units.size(); ++l) {
        if (std::abs(params[l].t_star - units[l].critical_time()) > 1e-12)
            throw std::invalid_argument("build_barrier: t_star does not match the unit's critical time");
        BarrierTerm term{units[l], params[l]};
        if (!h_caps.empty()) term.h_cap = h_caps[l];
        terms.push_back(std::move(term));
    }
    return CompositeBarrier(std::move(terms), eta, bound_radius);
}

}  // namespace stlcbf
