#pragma once

#include "stlcbf/ascent.hpp"
#include "stlcbf/barrier.hpp"
#include "stlcbf/error.hpp"
#include "stlcbf/gamma.hpp"
#include "stlcbf/normalize.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace stlcbf {

struct SearchConfig {
    double delta = 0.005;
    std::vector<double> eta_grid{20.0};
    int restarts = 3;
    double r_tolerance = 1e-3;
    /// gamma0 = lower + f (h(x0) - lower), f from this grid.
    std::vector<double> gamma0_fractions{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    /// gamma_inf = lower + f (h_cap - lower), lower = max(r, gamma0).
    std::vector<double> gamma_inf_fractions{0.001, 0.003, 0.01, 0.03, 0.1, 0.3, 0.5, 0.7, 0.9};
    /// Extra depth of the gamma0 range below min(0, h(x0) - 1), in units of 1 + |h(x0)|.
    double gamma0_depth = 4.0;
    /// Affine sup is capped at h(x0) + headroom_factor (1 + |h(x0)|).
    double headroom_factor = 10.0;
    int coordinate_sweeps = 2;
    int max_ascent_iterations = 20000;
    double ascent_tolerance = 1e-7;
    unsigned seed = 1;
    double kappa_floor = 1e-3;
    double kappa_cap = 1e6;
    int kappa_scan_points = 200;

    void validate() const {
        if (!(delta > 0.0)) throw std::invalid_argument("search: delta must be positive");
        if (!(r_tolerance > 0.0)) throw std::invalid_argument("search: r_tolerance must be positive");
        if (eta_grid.empty()) throw std::invalid_argument("search: empty eta grid");
        for (double e : eta_grid)
            if (!(e > 0.0)) throw std::invalid_argument("search: eta must be positive");
        auto check_fracs = [](const std::vector<double>& f, const char* what) {
            if (f.empty()) throw std::invalid_argument(std::string("search: empty ") + what);
            for (double v : f)
                if (!(v > 0.0 && v < 1.0)) throw std::invalid_argument(std::string("search: ") + what + " must lie in (0,1)");
        };
        check_fracs(gamma0_fractions, "gamma0_fractions");
        check_fracs(gamma_inf_fractions, "gamma_inf_fractions");
        if (restarts < 1) throw std::invalid_argument("search: restarts must be >= 1");
        if (!(kappa_floor > 0.0) || !(kappa_cap >= kappa_floor)) throw std::invalid_argument("search: bad kappa bounds");
    }
};

/// Per-unit quantities the search needs, computed once from x(0).
struct UnitAnalysis {
    double h0 = 0.0;      // h(x(0))
    double h_opt = 0.0;   // sup h (may be +inf)
    double h_cap = 0.0;   // finite cap of h_opt
    double t_star = 0.0;
};

inline std::vector<UnitAnalysis> analyze_units(const std::vector<OperatorUnit>& units, const Eigen::VectorXd& x0,
                                               double headroom_factor) {
    std::vector<UnitAnalysis> out;
    out.reserve(units.size());
    for (const auto& u : units) {
        UnitAnalysis a;
        a.h0 = u.predicate.value(x0);
        a.h_opt = u.predicate.sup();
        a.h_cap = std::isfinite(a.h_opt) ? a.h_opt : a.h0 + headroom_factor * (1.0 + std::abs(a.h0));
        a.t_star = u.critical_time();
        out.push_back(a);
    }
    return out;
}

/// Discrete gamma placement: one (gamma0, gamma_inf) fraction index pair per unit.
struct GammaChoice {
    std::vector<int> gamma0_index;
    std::vector<int> gamma_inf_index;

    bool operator==(const GammaChoice&) const = default;
};

/// Funnel parameters for `choice` at robustness `r`, or nothing if an
/// admissible interval is empty.
inline std::optional<std::vector<GammaParams>> place_gammas(const std::vector<UnitAnalysis>& info,
                                                            const GammaChoice& choice, double r,
                                                            const SearchConfig& cfg) {
    std::vector<GammaParams> out;
    out.reserve(info.size());
    for (std::size_t l = 0; l < info.size(); ++l) {
        const auto& a = info[l];
        const double f0 = cfg.gamma0_fractions[static_cast<std::size_t>(choice.gamma0_index[l])];
        const double finf = cfg.gamma_inf_fractions[static_cast<std::size_t>(choice.gamma_inf_index[l])];
        double g0;
        if (a.t_star > 0.0) {
            const double lower = std::min(0.0, a.h0 - 1.0) - cfg.gamma0_depth * (1.0 + std::abs(a.h0));
            g0 = lower + f0 * (a.h0 - lower);
        } else {
            if (!(a.h0 > r)) return std::nullopt;  // gamma0 in [r, h(x0))
            g0 = r + f0 * (a.h0 - r);
        }
        const double lo = std::max(r, g0);
        if (!(a.h_cap > lo)) return std::nullopt;  // gamma_inf in (max(r, gamma0), h_opt)
        const double ginf = lo + finf * (a.h_cap - lo);
        if (!(ginf > lo)) return std::nullopt;
        out.push_back(make_gamma(g0, ginf, r, a.t_star));
    }
    return out;
}

/// Outcome of checking the initial-value and switch-instant constraints.
struct FeasibilityReport {
    bool feasible = false;
    bool converged = true;
    double initial_value = 0.0;               // b(x(0), 0)
    std::vector<double> switch_times;         // s_1..s_q
    std::vector<Eigen::VectorXd> witnesses;   // maximizers of the left limits
    std::vector<double> witness_values;       // max_x lim_{tau->s_j^-} b(x, tau)
    std::vector<double> witness_gradient_norms;
    std::vector<double> witness_bound_weights;
    std::string warning;

    /// Smallest slack over all constraints (>= 0 iff the values clear delta).
    double margin(double delta) const {
        double m = initial_value - delta;
        for (double v : witness_values) m = std::min(m, v - delta);
        return m;
    }
};

/// b(x, 0) including only the terms active at t = 0; the bound term alone
/// when every deadline is 0.
inline double initial_barrier_value(const CompositeBarrier& b, const Eigen::VectorXd& x0) {
    if (b.active_count(0.0) == 0) return b.bound_value(x0);
    return b.value(x0, 0.0);
}

/// Check b(x0,0) >= delta and, for each switch s_j, maximize the concave
/// left limit by projected gradient ascent over |x| <= D.
inline FeasibilityReport feasibility_check(const CompositeBarrier& barrier, const Eigen::VectorXd& x0, double delta,
                                           const SearchConfig& cfg,
                                           const std::vector<Eigen::VectorXd>* warm_start = nullptr) {
    FeasibilityReport rep;
    rep.initial_value = initial_barrier_value(barrier, x0);
    rep.switch_times = barrier.schedule();
    AscentOptions opt;
    opt.max_iterations = cfg.max_ascent_iterations;
    opt.gradient_tolerance = cfg.ascent_tolerance;
    opt.radius = barrier.bound_radius();
    for (std::size_t j = 0; j < rep.switch_times.size(); ++j) {
        const double s = rep.switch_times[j];
        auto fn = [&](const Eigen::VectorXd& x) {
            auto ev = barrier.left_limit(x, s);
            return std::pair<double, Eigen::VectorXd>{ev.value, std::move(ev.grad_x)};
        };
        Eigen::VectorXd start = (warm_start && j < warm_start->size()) ? (*warm_start)[j]
                                : (j > 0 ? rep.witnesses[j - 1] : x0);
        auto res = maximize_concave(fn, std::move(start), opt);
        auto ev = barrier.left_limit(res.x, s);
        rep.witnesses.push_back(res.x);
        rep.witness_values.push_back(res.value);
        rep.witness_gradient_norms.push_back(res.gradient_norm);
        rep.witness_bound_weights.push_back(ev.bound_weight);
        if (!res.converged) {
            rep.converged = false;
            rep.warning = "ascent did not converge at s=" + std::to_string(s) +
                          " (|grad|=" + std::to_string(res.gradient_norm) + ")";
        }
    }
    rep.feasible = rep.converged && rep.margin(delta) >= 0.0;
    return rep;
}

/// Convenience overload: build the barrier for the given parameters first.
inline FeasibilityReport feasibility_check(const std::vector<OperatorUnit>& units, const Eigen::VectorXd& x0,
                                           const std::vector<GammaParams>& params, double eta, double bound_radius,
                                           double delta, const SearchConfig& cfg = {}) {
    return feasibility_check(build_barrier(units, params, eta, bound_radius), x0, delta, cfg);
}

/// Linear class-K gain from the gain bound kappa > -zeta/delta with
/// zeta = -exp(-eta delta) dmax / exp(-eta bmax), evaluated in log space.
struct KappaBound {
    double kappa = 0.0;
    double log_neg_zeta = -std::numeric_limits<double>::infinity();  // ln(-zeta)
    double delta_max = 0.0;
    double b_max = 0.0;
    bool clamped = false;
    bool floored = false;
};

inline KappaBound kappa_from_bound(double eta, double delta, double delta_max, double b_max, double floor,
                                   double cap) {
    KappaBound k;
    k.delta_max = delta_max;
    k.b_max = b_max;
    if (!(delta_max > 0.0)) {
        k.kappa = floor;
        k.floored = true;
        return k;
    }
    k.log_neg_zeta = std::log(delta_max) + eta * (b_max - delta);
    const double log_kappa = std::log(1.1) + k.log_neg_zeta - std::log(delta);
    if (log_kappa > std::log(cap)) {
        k.kappa = cap;
        k.clamped = true;
    } else {
        k.kappa = std::max(floor, std::exp(log_kappa));
        k.floored = k.kappa == floor;
    }
    return k;
}

/// Gain bound for a built barrier. Delta_l uses the magnitude
/// decay_l (gamma_inf_l - gamma0_l) of the funnel slope at t = 0.
inline KappaBound compute_kappa(const CompositeBarrier& barrier, double delta, double floor = 1e-3,
                                double cap = 1e6) {
    double dmax = 0.0;
    double bmax = barrier.bound_radius() + kBoundSmoothing;
    for (const auto& t : barrier.terms()) {
        dmax = std::max(dmax, t.gamma.decay * (t.gamma.gamma_inf - t.gamma.gamma0));
        bmax = std::max(bmax, t.h_cap - t.gamma.gamma0);
    }
    return kappa_from_bound(barrier.eta(), delta, dmax, bmax, floor, cap);
}

/// Maximizer of b(., t) over |x| <= D with its value and derivatives.
struct PeakSample {
    double t = 0.0;
    Eigen::VectorXd x;
    double value = 0.0;
    double dbdt = 0.0;
    double gradient_norm = 0.0;
};

/// Follow argmax_x b(x, t) over a grid inside every switch interval.
inline std::vector<PeakSample> trace_peaks(const CompositeBarrier& barrier, const Eigen::VectorXd& x0, int points_per_interval,
                                           const SearchConfig& cfg = {}) {
    std::vector<PeakSample> out;
    AscentOptions opt;
    opt.max_iterations = cfg.max_ascent_iterations;
    opt.gradient_tolerance = cfg.ascent_tolerance;
    opt.radius = barrier.bound_radius();
    Eigen::VectorXd warm = x0;
    double start = 0.0;
    for (double end : barrier.schedule()) {
        for (int k = 0; k < points_per_interval; ++k) {
            const double t = start + (end - start) * (k + 0.5) / points_per_interval;
            auto fn = [&](const Eigen::VectorXd& x) {
                auto ev = barrier.gradients(x, t);
                return std::pair<double, Eigen::VectorXd>{ev.value, std::move(ev.grad_x)};
            };
            auto res = maximize_concave(fn, warm, opt);
            warm = res.x;
            const auto ev = barrier.gradients(res.x, t);
            out.push_back({t, res.x, ev.value, ev.dbdt, ev.grad_x.norm()});
        }
        start = end;
    }
    return out;
}

/// Smallest gain (times 1.1, at least `floor`) with dbdt + kappa b > 0 at
/// every traced peak of b(., t).
inline double peak_scan_kappa(const CompositeBarrier& barrier, const Eigen::VectorXd& x0, const SearchConfig& cfg) {
    double worst = 0.0;
    for (const auto& pk : trace_peaks(barrier, x0, cfg.kappa_scan_points, cfg)) {
        if (!(pk.value > 0.0)) return cfg.kappa_cap;  // empty safe set; no finite gain helps
        worst = std::max(worst, -pk.dbdt / pk.value);
    }
    return std::clamp(1.1 * worst, cfg.kappa_floor, cfg.kappa_cap);
}

struct SearchDiagnostics {
    double eta = 0.0;
    double initial_margin = 0.0;
    std::vector<double> switch_margins;
    std::vector<double> witness_gradient_norms;
    std::vector<double> witness_bound_weights;
    double r_upper = 0.0;  // bisection bracket top
    long feasibility_checks = 0;
    std::vector<std::string> warnings;
};

struct SearchResult {
    bool feasible = false;
    double r_star = 0.0;
    CompositeBarrier barrier;
    std::vector<Eigen::VectorXd> witnesses;
    GammaChoice choice;
    KappaBound kappa_bound;  // gain bound (clamped)
    double kappa_scan = 0.0; // gain from the peak scan
    double delta = 0.0;
    SearchDiagnostics diagnostics;
};

namespace detail {

struct Candidate {
    GammaChoice choice;
    double eta = 0.0;
    std::vector<GammaParams> params;
    FeasibilityReport report;
    double margin = -std::numeric_limits<double>::infinity();
};

class RobustnessSearch {
public:
    RobustnessSearch(const std::vector<OperatorUnit>& units, const Eigen::VectorXd& x0, const SearchConfig& cfg)
        : units_(units), x0_(x0), cfg_(cfg), info_(analyze_units(units, x0, cfg.headroom_factor)) {
        for (std::size_t l = 0; l < units_.size(); ++l) {
            if (units_[l].predicate.dim() != x0.size()) throw std::invalid_argument("search: x0 dimension mismatch");
            if (info_[l].h_opt < 0.0) throw SemanticError("predicate " + std::to_string(l + 1) + " is not satisfiable");
        }
        bound_radius_ = initial_bound_radius();
    }

    double bound_radius() const noexcept { return bound_radius_; }
    void set_bound_radius(double d) { bound_radius_ = d; }
    const std::vector<UnitAnalysis>& info() const noexcept { return info_; }
    long checks() const noexcept { return checks_; }

    /// Necessary upper bound on r: at every switch the units already past
    /// their critical time must hold with margin r + delta simultaneously.
    double r_upper_bound() const {
        double hi = std::numeric_limits<double>::infinity();
        for (const auto& a : info_) {
            hi = std::min(hi, a.h_cap);
            if (a.t_star <= 0.0) hi = std::min(hi, a.h0);
        }
        std::vector<double> times;
        for (const auto& u : units_)
            if (u.deadline() > 0.0) times.push_back(u.deadline());
        std::sort(times.begin(), times.end());
        times.erase(std::unique(times.begin(), times.end()), times.end());
        const double eta = 200.0;
        for (double s : times) {
            std::vector<const Predicate*> must;
            for (std::size_t l = 0; l < units_.size(); ++l)
                if (info_[l].t_star <= s && units_[l].deadline() >= s) must.push_back(&units_[l].predicate);
            if (must.empty()) continue;
            auto fn = [&](const Eigen::VectorXd& x) {
                double vmin = std::numeric_limits<double>::infinity();
                std::vector<double> v(must.size());
                for (std::size_t i = 0; i < must.size(); ++i) vmin = std::min(vmin, v[i] = must[i]->value(x));
                double sum = 0.0;
                Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
                for (std::size_t i = 0; i < must.size(); ++i) {
                    const double w = std::exp(-eta * (v[i] - vmin));
                    sum += w;
                    g += w * must[i]->gradient(x);
                }
                return std::pair<double, Eigen::VectorXd>{vmin - std::log(sum) / eta, g / sum};
            };
            AscentOptions opt;
            opt.radius = bound_radius_;
            opt.max_iterations = cfg_.max_ascent_iterations;
            opt.gradient_tolerance = 1e-7;
            const auto res = maximize_concave(fn, x0_, opt);
            hi = std::min(hi, res.value + std::log(static_cast<double>(must.size())) / eta - cfg_.delta);
        }
        return hi;
    }

    std::optional<std::vector<GammaParams>> params(const GammaChoice& c, double r) const {
        return place_gammas(info_, c, r, cfg_);
    }

    Candidate evaluate(const GammaChoice& c, double r, double eta, const std::vector<Eigen::VectorXd>* warm) {
        Candidate cand{c, eta, {}, {}, -std::numeric_limits<double>::infinity()};
        auto p = params(c, r);
        if (!p) return cand;
        cand.params = std::move(*p);
        const auto barrier = build_barrier(units_, cand.params, eta, bound_radius_, caps());
        cand.report = feasibility_check(barrier, x0_, cfg_.delta, cfg_, warm);
        ++checks_;
        cand.margin = cand.report.converged ? cand.report.margin(cfg_.delta)
                                            : std::min(cand.report.margin(cfg_.delta), -1e-12);
        return cand;
    }

    /// First feasible placement at robustness r, or the best-margin one.
    Candidate search(double r) {
        Candidate best;
        for (double eta : cfg_.eta_grid) {
            for (int restart = 0; restart < cfg_.restarts; ++restart) {
                Candidate cur = evaluate(initial_choice(restart), r, eta, nullptr);
                if (cur.margin >= 0.0 && cur.report.feasible) return cur;
                for (int sweep = 0; sweep < cfg_.coordinate_sweeps; ++sweep) {
                    bool improved = false;
                    for (std::size_t l = 0; l < units_.size(); ++l) {
                        for (int axis = 0; axis < 2; ++axis) {
                            const int n = static_cast<int>(axis == 0 ? cfg_.gamma0_fractions.size()
                                                                     : cfg_.gamma_inf_fractions.size());
                            for (int idx = 0; idx < n; ++idx) {
                                GammaChoice c = cur.choice;
                                auto& slot = axis == 0 ? c.gamma0_index[l] : c.gamma_inf_index[l];
                                if (slot == idx) continue;
                                slot = idx;
                                const auto* warm = cur.report.witnesses.empty() ? nullptr : &cur.report.witnesses;
                                Candidate next = evaluate(c, r, eta, warm);
                                if (next.margin > cur.margin) {
                                    cur = std::move(next);
                                    improved = true;
                                    if (cur.report.feasible) return cur;
                                }
                            }
                        }
                    }
                    if (!improved) break;
                }
                if (cur.margin > best.margin || best.params.empty()) best = std::move(cur);
            }
        }
        return best;
    }

    std::vector<double> caps() const {
        std::vector<double> c;
        for (const auto& a : info_) c.push_back(a.h_cap);
        return c;
    }

private:
    double initial_bound_radius() const {
        double scale = std::max(1.0, x0_.norm());
        for (const auto& u : units_) {
            const auto& p = u.predicate;
            if (p.is_affine()) {
                const double cn = p.coeffs().norm();
                if (cn > 0.0 && p.offset() < 0.0) scale = std::max(scale, -p.offset() / cn);
            } else {
                Eigen::JacobiSVD<Eigen::MatrixXd> svd(p.center_map());
                const Eigen::VectorXd center = svd.solve(-p.shift());
                const auto& sv = svd.singularValues();
                double smin = std::numeric_limits<double>::infinity();
                for (Eigen::Index i = 0; i < sv.size(); ++i)
                    if (sv(i) > 1e-12) smin = std::min(smin, sv(i));
                const double reach = std::isfinite(smin) ? std::sqrt(std::max(p.level(), 0.0)) / smin : 0.0;
                scale = std::max(scale, center.norm() + reach);
            }
        }
        return 2.0 * std::max(x0_.norm(), scale);
    }

    GammaChoice initial_choice(int restart) const {
        GammaChoice c;
        const int n0 = static_cast<int>(cfg_.gamma0_fractions.size());
        const int ninf = static_cast<int>(cfg_.gamma_inf_fractions.size());
        if (restart == 0) {
            // Deep gamma0 everywhere; small gamma_inf where the funnel must be
            // held after t_star, large where the term expires at t_star.
            for (std::size_t l = 0; l < units_.size(); ++l) {
                c.gamma0_index.push_back(0);
                const bool expires_at_star = info_[l].t_star >= units_[l].deadline() && info_[l].t_star > 0.0;
                c.gamma_inf_index.push_back(expires_at_star ? ninf - 1 : 0);
            }
            return c;
        }
        std::mt19937_64 rng(cfg_.seed * 1000003ULL + static_cast<unsigned long long>(restart));
        std::uniform_int_distribution<int> d0(0, n0 - 1), dinf(0, ninf - 1);
        for (std::size_t l = 0; l < units_.size(); ++l) {
            c.gamma0_index.push_back(d0(rng));
            c.gamma_inf_index.push_back(dinf(rng));
        }
        return c;
    }

    const std::vector<OperatorUnit>& units_;
    Eigen::VectorXd x0_;
    SearchConfig cfg_;
    std::vector<UnitAnalysis> info_;
    double bound_radius_ = 0.0;
    long checks_ = 0;
};

}  // namespace detail

/// Largest r (to within r_tolerance) for which a gamma placement satisfies
/// the initial-value and switch constraints with margin delta.
inline SearchResult maximize_r(const std::vector<OperatorUnit>& units, const Eigen::VectorXd& x0,
                               const SearchConfig& cfg = {}) {
    cfg.validate();
    if (units.empty()) throw std::invalid_argument("maximize_r: empty unit list");
    detail::RobustnessSearch search(units, x0, cfg);
    SearchResult result;
    result.delta = cfg.delta;
    const double r_hi = search.r_upper_bound();
    result.diagnostics.r_upper = r_hi;

    auto finish_infeasible = [&](const detail::Candidate& best) {
        result.feasible = false;
        result.diagnostics.eta = best.eta;
        result.diagnostics.initial_margin = best.report.initial_value - cfg.delta;
        for (double v : best.report.witness_values) result.diagnostics.switch_margins.push_back(v - cfg.delta);
        if (!best.report.warning.empty()) result.diagnostics.warnings.push_back(best.report.warning);
        result.diagnostics.feasibility_checks = search.checks();
        return result;
    };

    if (!(r_hi > 0.0)) {
        result.diagnostics.warnings.push_back("no positive robustness is admissible for these predicates");
        return finish_infeasible({});
    }

    double lo = std::min(cfg.r_tolerance, 0.5 * r_hi);
    detail::Candidate best = search.search(lo);
    if (!best.report.feasible) return finish_infeasible(best);
    double hi = r_hi;
    while (hi - lo > cfg.r_tolerance) {
        const double mid = 0.5 * (lo + hi);
        detail::Candidate cand = search.search(mid);
        if (cand.report.feasible) {
            lo = mid;
            best = std::move(cand);
        } else {
            hi = mid;
        }
    }

    // Grow D until the bound term is negligible at every witness.
    for (int doubling = 0; doubling < 10; ++doubling) {
        const auto& w = best.report.witness_bound_weights;
        if (std::all_of(w.begin(), w.end(), [](double v) { return v < 1e-6; })) break;
        const double old = search.bound_radius();
        search.set_bound_radius(2.0 * old);
        detail::Candidate grown = search.evaluate(best.choice, lo, best.eta, &best.report.witnesses);
        if (!grown.report.feasible) {
            search.set_bound_radius(old);
            result.diagnostics.warnings.push_back("bound term weight at a witness stays >= 1e-6");
            break;
        }
        best = std::move(grown);
    }
    {
        const auto& w = best.report.witness_bound_weights;
        if (!std::all_of(w.begin(), w.end(), [](double v) { return v < 1e-6; }) &&
            (result.diagnostics.warnings.empty()))
            result.diagnostics.warnings.push_back("bound term weight at a witness stays >= 1e-6");
    }

    result.feasible = true;
    result.r_star = lo;
    result.barrier = build_barrier(units, best.params, best.eta, search.bound_radius(), search.caps());
    result.witnesses = best.report.witnesses;
    result.choice = best.choice;
    result.kappa_bound = compute_kappa(result.barrier, cfg.delta, cfg.kappa_floor, cfg.kappa_cap);
    if (result.kappa_bound.clamped)
        result.diagnostics.warnings.push_back("gain bound exceeds cap; kappa clamped to " + std::to_string(cfg.kappa_cap));
    result.kappa_scan = peak_scan_kappa(result.barrier, x0, cfg);
    result.diagnostics.eta = best.eta;
    result.diagnostics.initial_margin = best.report.initial_value - cfg.delta;
    for (double v : best.report.witness_values) result.diagnostics.switch_margins.push_back(v - cfg.delta);
    result.diagnostics.witness_gradient_norms = best.report.witness_gradient_norms;
    result.diagnostics.witness_bound_weights = best.report.witness_bound_weights;
    result.diagnostics.feasibility_checks = search.checks();
    return result;
}

}  // namespace stlcbf
