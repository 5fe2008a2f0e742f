#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stlcbf {

/// Malformed formula text. `position()` is the byte offset of the offending token.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t position)
        : std::runtime_error("syntax error at " + std::to_string(position) + ": " + what),
          position_(position) {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// Well-formed text that falls outside the supported fragment (bad interval,
/// temporal nesting, negated non-literal, ...).
class SemanticError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A robustness window reaches outside the sampled signal.
class WindowError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Barrier queried where it is undefined (no active task term).
class BarrierError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// The per-agent QP has a zero constraint row with positive right-hand side.
class InfeasibleQp : public std::runtime_error {
public:
    InfeasibleQp(double t, std::size_t agent, double rhs, double row_norm)
        : std::runtime_error("agent QP infeasible: agent " + std::to_string(agent + 1) +
                             " at t=" + std::to_string(t) + " (rhs=" + std::to_string(rhs) +
                             ", |a|=" + std::to_string(row_norm) + ")"),
          t_(t), agent_(agent), rhs_(rhs), row_norm_(row_norm) {}

    double time() const noexcept { return t_; }
    std::size_t agent() const noexcept { return agent_; }
    double rhs() const noexcept { return rhs_; }
    double row_norm() const noexcept { return row_norm_; }

private:
    double t_;
    std::size_t agent_;
    double rhs_;
    double row_norm_;
};

/// Realized unmodeled disturbance exceeded the declared bound C.
class CouplingBoundViolation : public std::runtime_error {
public:
    CouplingBoundViolation(double t, std::size_t agent, double norm, double bound)
        : std::runtime_error("coupling bound violated: agent " + std::to_string(agent + 1) +
                             " at t=" + std::to_string(t) + " (|c|=" + std::to_string(norm) +
                             " > C=" + std::to_string(bound) + ")"),
          agent_(agent) {}

    std::size_t agent() const noexcept { return agent_; }

private:
    std::size_t agent_;
};

}  // namespace stlcbf
