#pragma once

#include "stlcbf/error.hpp"
#include "stlcbf/formula.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace stlcbf {

/// Time-stamped stacked states. times strictly increasing, times[0] = 0.
struct SampledSignal {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> states;

    std::size_t size() const noexcept { return times.size(); }

    void validate() const {
        if (times.empty() || times.size() != states.size())
            throw std::invalid_argument("signal needs matching, non-empty times and states");
        if (times.front() != 0.0) throw std::invalid_argument("signal must start at t = 0");
        for (std::size_t i = 1; i < times.size(); ++i)
            if (!(times[i] > times[i - 1])) throw std::invalid_argument("signal times must be strictly increasing");
    }
};

/// Which samples the left operand of U[a,b] must cover for a witness t'.
/// `window_start` takes [t+a, t'], matching the until encoding used for
/// barrier construction; `evaluation_time` takes [t, t'].
enum class UntilSemantics { window_start, evaluation_time };

namespace detail {

struct IndexRange {
    std::size_t first;
    std::size_t last;  // inclusive
};

class RobustnessEvaluator {
public:
    RobustnessEvaluator(const SampledSignal& s, UntilSemantics u) : s_(s), until_(u) {}

    std::size_t nearest(double t) const {
        const double e = eps(t);
        if (t < s_.times.front() - e || t > s_.times.back() + e)
            throw WindowError("evaluation time " + std::to_string(t) + " outside signal span");
        auto it = std::lower_bound(s_.times.begin(), s_.times.end(), t);
        if (it == s_.times.end()) return s_.size() - 1;
        auto k = static_cast<std::size_t>(it - s_.times.begin());
        if (k > 0 && t - s_.times[k - 1] <= s_.times[k] - t) --k;
        return k;
    }

    // Samples with time in [lo, hi]; if none, the two samples bracketing it.
    IndexRange window(double lo, double hi) const {
        const double e = eps(hi);
        if (lo < s_.times.front() - e || hi > s_.times.back() + e)
            throw WindowError("window [" + std::to_string(lo) + ", " + std::to_string(hi) + "] exceeds signal span");
        const auto& ts = s_.times;
        auto first = std::lower_bound(ts.begin(), ts.end(), lo - e);
        auto past = std::upper_bound(ts.begin(), ts.end(), hi + e);
        if (first < past)
            return {static_cast<std::size_t>(first - ts.begin()), static_cast<std::size_t>(past - ts.begin()) - 1};
        // first == past: no sample inside, first points at the one after hi
        const auto after = static_cast<std::size_t>(first - ts.begin());
        if (after == ts.size()) return {after - 1, after - 1};
        if (after == 0) return {0, 0};
        return {after - 1, after};
    }

    double at(const Formula& f, std::size_t k) const {
        const double tk = s_.times[k];
        switch (f.kind()) {
            case NodeKind::top: return std::numeric_limits<double>::infinity();
            case NodeKind::literal: return f.predicate().value(s_.states[k]);
            case NodeKind::conjunction: {
                double v = std::numeric_limits<double>::infinity();
                for (const auto& c : f.children()) v = std::min(v, at(c, k));
                return v;
            }
            case NodeKind::always: {
                const auto w = window(tk + f.interval().lo, tk + f.interval().hi);
                double v = std::numeric_limits<double>::infinity();
                for (auto i = w.first; i <= w.last; ++i) v = std::min(v, at(f.children()[0], i));
                return v;
            }
            case NodeKind::eventually: {
                const auto w = window(tk + f.interval().lo, tk + f.interval().hi);
                double v = -std::numeric_limits<double>::infinity();
                for (auto i = w.first; i <= w.last; ++i) v = std::max(v, at(f.children()[0], i));
                return v;
            }
            case NodeKind::until: {
                const auto w = window(tk + f.interval().lo, tk + f.interval().hi);
                const Formula& lhs = f.children()[0];
                const Formula& rhs = f.children()[1];
                double prefix = std::numeric_limits<double>::infinity();
                if (until_ == UntilSemantics::evaluation_time)
                    for (auto i = k; i < w.first; ++i) prefix = std::min(prefix, at(lhs, i));
                double v = -std::numeric_limits<double>::infinity();
                for (auto i = w.first; i <= w.last; ++i) {
                    prefix = std::min(prefix, at(lhs, i));
                    v = std::max(v, std::min(at(rhs, i), prefix));
                }
                return v;
            }
        }
        return std::numeric_limits<double>::quiet_NaN();
    }

private:
    static double eps(double t) { return 1e-9 * std::max(1.0, std::abs(t)); }

    const SampledSignal& s_;
    UntilSemantics until_;
};

}  // namespace detail

/// Quantitative robustness of `f` on the sampled signal at time `t`.
/// Window sup/inf become max/min over samples in the closed window; `t`
/// snaps to the nearest sample.
inline double robustness(const Formula& f, const SampledSignal& s, double t = 0.0,
                         UntilSemantics until = UntilSemantics::window_start) {
    s.validate();
    detail::RobustnessEvaluator ev(s, until);
    return ev.at(f, ev.nearest(t));
}

}  // namespace stlcbf
