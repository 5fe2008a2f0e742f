#pragma once

#include "stlcbf/error.hpp"
#include "stlcbf/predicate.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace stlcbf {

/// Closed time interval [lo, hi] in seconds, 0 <= lo <= hi < inf.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool operator==(const Interval&) const = default;
};

inline void check_interval(const Interval& iv) {
    if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi)) throw SemanticError("interval bounds must be finite");
    if (iv.lo < 0.0) throw SemanticError("interval bounds must be non-negative");
    if (iv.lo > iv.hi) throw SemanticError("interval a > b");
}

enum class NodeKind { top, literal, conjunction, always, eventually, until };

/// AST of the supported STL fragment:
///
///   psi ::= true | mu | !mu | psi & psi
///   phi ::= G[a,b] psi | F[a,b] psi | psi U[a,b] psi | phi & phi
///
/// Negated literals carry the flipped predicate (-h), so there is no
/// negation node. The factory functions enforce the fragment: temporal
/// operators only wrap state formulas.
class Formula {
public:
    static Formula top() { return Formula(NodeKind::top); }

    static Formula literal(Predicate p) {
        Formula f(NodeKind::literal);
        f.predicate_ = std::move(p);
        return f;
    }

    static Formula conjunction(std::vector<Formula> children) {
        if (children.empty()) return top();
        if (children.size() == 1) return std::move(children.front());
        Formula f(NodeKind::conjunction);
        for (auto& c : children) {
            // flatten nested conjunctions
            if (c.kind_ == NodeKind::conjunction) {
                for (auto& g : c.children_) f.children_.push_back(std::move(g));
            } else {
                f.children_.push_back(std::move(c));
            }
        }
        return f;
    }

    static Formula always(Interval iv, Formula body) { return temporal(NodeKind::always, iv, {std::move(body)}); }
    static Formula eventually(Interval iv, Formula body) {
        return temporal(NodeKind::eventually, iv, {std::move(body)});
    }
    static Formula until(Interval iv, Formula lhs, Formula rhs) {
        return temporal(NodeKind::until, iv, {std::move(lhs), std::move(rhs)});
    }

    NodeKind kind() const noexcept { return kind_; }
    const Predicate& predicate() const { return *predicate_; }
    const Interval& interval() const noexcept { return interval_; }
    const std::vector<Formula>& children() const noexcept { return children_; }

    bool is_temporal() const noexcept {
        return kind_ == NodeKind::always || kind_ == NodeKind::eventually || kind_ == NodeKind::until;
    }

    /// True for psi-class formulas (no temporal operator anywhere below).
    bool is_state_formula() const {
        if (is_temporal()) return false;
        for (const auto& c : children_)
            if (!c.is_state_formula()) return false;
        return true;
    }

    /// True for phi-class formulas: temporal units joined by conjunction.
    bool is_task_formula() const {
        if (is_temporal()) return true;
        if (kind_ != NodeKind::conjunction) return false;
        for (const auto& c : children_)
            if (!c.is_task_formula()) return false;
        return true;
    }

    /// Largest window end reached from t = 0.
    double horizon() const {
        double h = is_temporal() ? interval_.hi : 0.0;
        for (const auto& c : children_) h = std::max(h, (is_temporal() ? interval_.hi : 0.0) + c.horizon());
        return h;
    }

private:
    explicit Formula(NodeKind k) : kind_(k) {}

    static Formula temporal(NodeKind k, Interval iv, std::vector<Formula> children) {
        check_interval(iv);
        for (const auto& c : children)
            if (!c.is_state_formula()) throw SemanticError("temporal nesting not in fragment");
        Formula f(k);
        f.interval_ = iv;
        f.children_ = std::move(children);
        return f;
    }

    NodeKind kind_;
    std::optional<Predicate> predicate_;
    Interval interval_{};
    std::vector<Formula> children_;
};

}  // namespace stlcbf
