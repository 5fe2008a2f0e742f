#pragma once

#include "stlcbf/error.hpp"
#include "stlcbf/formula.hpp"

#include <vector>

namespace stlcbf {

enum class UnitKind { always, eventually };

/// One G/F operator over a single predicate; the building block of a barrier term.
struct OperatorUnit {
    UnitKind kind = UnitKind::always;
    Predicate predicate;
    Interval interval;

    double deadline() const noexcept { return interval.hi; }

    /// Time from which the predicate must hold with margin r:
    /// the window end for eventually, the window start for always.
    double critical_time() const noexcept { return kind == UnitKind::eventually ? interval.hi : interval.lo; }
};

namespace detail {

inline void collect_literals(const Formula& f, std::vector<Predicate>& out) {
    switch (f.kind()) {
        case NodeKind::top: return;
        case NodeKind::literal: out.push_back(f.predicate()); return;
        case NodeKind::conjunction:
            for (const auto& c : f.children()) collect_literals(c, out);
            return;
        default: throw SemanticError("temporal nesting not in fragment");
    }
}

inline void normalize_into(const Formula& f, std::vector<OperatorUnit>& out) {
    std::vector<Predicate> lits;
    switch (f.kind()) {
        case NodeKind::conjunction:
            for (const auto& c : f.children()) normalize_into(c, out);
            return;
        case NodeKind::always:
        case NodeKind::eventually: {
            const auto kind = f.kind() == NodeKind::always ? UnitKind::always : UnitKind::eventually;
            collect_literals(f.children()[0], lits);
            for (auto& p : lits) out.push_back({kind, std::move(p), f.interval()});
            return;
        }
        case NodeKind::until: {
            // lhs must hold on [a, b] and rhs at b: the until witness is fixed at t' = b.
            const Interval iv = f.interval();
            collect_literals(f.children()[0], lits);
            for (auto& p : lits) out.push_back({UnitKind::always, std::move(p), iv});
            lits.clear();
            collect_literals(f.children()[1], lits);
            for (auto& p : lits) out.push_back({UnitKind::eventually, std::move(p), Interval{iv.hi, iv.hi}});
            return;
        }
        default: throw SemanticError("top-level formula must be a conjunction of temporal operators");
    }
}

}  // namespace detail

/// Flatten a task formula into one operator unit per literal.
inline std::vector<OperatorUnit> normalize(const Formula& f) {
    std::vector<OperatorUnit> out;
    detail::normalize_into(f, out);
    return out;
}

/// Conjunction of G/F operators equivalent to the given units.
inline Formula rebuild(const std::vector<OperatorUnit>& units) {
    std::vector<Formula> parts;
    parts.reserve(units.size());
    for (const auto& u : units) {
        auto lit = Formula::literal(u.predicate);
        parts.push_back(u.kind == UnitKind::always ? Formula::always(u.interval, std::move(lit))
                                                   : Formula::eventually(u.interval, std::move(lit)));
    }
    return Formula::conjunction(std::move(parts));
}

}  // namespace stlcbf
