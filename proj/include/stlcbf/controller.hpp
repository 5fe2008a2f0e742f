#pragma once

#include "stlcbf/barrier.hpp"
#include "stlcbf/error.hpp"
#include "stlcbf/formula.hpp"
#include "stlcbf/layout.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace stlcbf {

inline constexpr double kZeroThreshold = 1e-12;

/// f_i(x_i, t). Scripted drift is a piecewise-constant lookup: the entry
/// with the largest time <= t applies (zero before the first entry).
struct DriftSpec {
    enum class Kind { zero, affine, scripted };
    Kind kind = Kind::zero;
    Eigen::MatrixXd matrix;  // affine: A
    Eigen::VectorXd offset;  // affine: c
    std::vector<std::pair<double, Eigen::VectorXd>> table;

    static DriftSpec zero() { return {}; }
    static DriftSpec affine(Eigen::MatrixXd a, Eigen::VectorXd c) {
        DriftSpec d;
        d.kind = Kind::affine;
        d.matrix = std::move(a);
        d.offset = std::move(c);
        return d;
    }
    static DriftSpec scripted(std::vector<std::pair<double, Eigen::VectorXd>> table) {
        std::sort(table.begin(), table.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
        DriftSpec d;
        d.kind = Kind::scripted;
        d.table = std::move(table);
        return d;
    }
};

struct InputMapSpec {
    enum class Kind { identity, constant };
    Kind kind = Kind::identity;
    Eigen::MatrixXd matrix;  // constant: n_i x m_i

    static InputMapSpec identity() { return {}; }
    static InputMapSpec constant(Eigen::MatrixXd g) { return {Kind::constant, std::move(g)}; }
};

/// Agent dynamics x_i' = f_i(x_i, t) + g_i(x_i, t) u_i + c_i.
class AgentModel {
public:
    AgentModel() = default;
    AgentModel(int state_dim, DriftSpec drift = {}, InputMapSpec input = {})
        : state_dim_(state_dim), drift_(std::move(drift)), input_(std::move(input)) {
        if (state_dim_ < 1) throw std::invalid_argument("agent: state dimension must be >= 1");
        input_dim_ = input_.kind == InputMapSpec::Kind::identity ? state_dim_ : static_cast<int>(input_.matrix.cols());
        if (input_.kind == InputMapSpec::Kind::constant) {
            if (input_.matrix.rows() != state_dim_) throw std::invalid_argument("agent: input map has wrong row count");
            if (input_dim_ < state_dim_) throw std::invalid_argument("agent: need input dimension >= state dimension");
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(input_.matrix);
            if (!(svd.singularValues().minCoeff() > 1e-9))
                throw std::invalid_argument("agent: input map is not full row rank");
            const Eigen::MatrixXd& g = input_.matrix;
            right_inverse_ = g.transpose() * (g * g.transpose()).inverse();
        } else {
            right_inverse_ = Eigen::MatrixXd::Identity(state_dim_, state_dim_);
        }
        switch (drift_.kind) {
            case DriftSpec::Kind::zero: break;
            case DriftSpec::Kind::affine:
                if (drift_.matrix.rows() != state_dim_ || drift_.matrix.cols() != state_dim_ ||
                    drift_.offset.size() != state_dim_)
                    throw std::invalid_argument("agent: affine drift has wrong shape");
                break;
            case DriftSpec::Kind::scripted:
                for (const auto& [t, v] : drift_.table)
                    if (v.size() != state_dim_) throw std::invalid_argument("agent: scripted drift has wrong size");
                break;
        }
    }

    int state_dim() const noexcept { return state_dim_; }
    int input_dim() const noexcept { return input_dim_; }
    const DriftSpec& drift_spec() const noexcept { return drift_; }
    const InputMapSpec& input_spec() const noexcept { return input_; }

    Eigen::VectorXd drift(const Eigen::Ref<const Eigen::VectorXd>& x, double t) const {
        switch (drift_.kind) {
            case DriftSpec::Kind::zero: return Eigen::VectorXd::Zero(state_dim_);
            case DriftSpec::Kind::affine: return drift_.matrix * x + drift_.offset;
            case DriftSpec::Kind::scripted: {
                auto it = std::upper_bound(drift_.table.begin(), drift_.table.end(), t,
                                           [](double v, const auto& e) { return v < e.first; });
                if (it == drift_.table.begin()) return Eigen::VectorXd::Zero(state_dim_);
                return std::prev(it)->second;
            }
        }
        return Eigen::VectorXd::Zero(state_dim_);
    }

    Eigen::MatrixXd input_map(const Eigen::Ref<const Eigen::VectorXd>& /*x*/, double /*t*/) const {
        if (input_.kind == InputMapSpec::Kind::identity) return Eigen::MatrixXd::Identity(state_dim_, state_dim_);
        return input_.matrix;
    }

    /// g^T (g g^T)^{-1}, so that g * right_inverse() = I.
    const Eigen::MatrixXd& right_inverse() const noexcept { return right_inverse_; }

private:
    int state_dim_ = 0;
    int input_dim_ = 0;
    DriftSpec drift_;
    InputMapSpec input_;
    Eigen::MatrixXd right_inverse_;
};

/// How the secondary drift f_u enters the barrier condition.
enum class SecondaryMode { none, known, unknown };

/// Pairwise repulsion f_u,i = gain * sum_j (x_i - x_j) / (|x_i - x_j| + eps)
/// over the agents of `group`.
struct SecondaryController {
    std::vector<std::size_t> group;
    double gain = 1.0;
    double regularizer = 0.01;

    bool covers(std::size_t agent) const { return std::find(group.begin(), group.end(), agent) != group.end(); }

    /// `state_of(j)` returns the state of global agent j.
    template <class StateOf>
    Eigen::VectorXd drift(std::size_t agent, StateOf&& state_of) const {
        const Eigen::VectorXd xi = state_of(agent);
        Eigen::VectorXd out = Eigen::VectorXd::Zero(xi.size());
        if (!covers(agent)) return out;
        for (std::size_t j : group) {
            if (j == agent) continue;
            const Eigen::VectorXd d = xi - state_of(j);
            out += d / (d.norm() + regularizer);
        }
        return gain * out;
    }
};

/// Agents jointly responsible for one task, with its barrier over the
/// stacked clique state.
struct Clique {
    std::vector<std::size_t> members;  // global agent indices, in stacking order
    CompositeBarrier barrier;
    double coupling_bound = 0.0;  // C
    double kappa = 1.0;
    Formula formula = Formula::top();  // over the full team state
    double r_star = 0.0;
};

/// sqrt(n_bar_k * max_i n_i).
inline double noise_inflation(int clique_dim, int max_agent_dim) {
    return std::sqrt(static_cast<double>(clique_dim) * static_cast<double>(max_agent_dim));
}

/// Gradient-norm share of agent block `i` in the clique gradient.
inline double load_share(const std::vector<double>& block_norms, std::size_t i) {
    double den = 0.0;
    for (double n : block_norms) den += n;
    if (!(den > kZeroThreshold)) return 1.0;
    return block_norms.at(i) / den;
}

inline std::vector<double> block_norms(const Eigen::VectorXd& grad, const StateLayout& local) {
    std::vector<double> out(local.agents());
    for (std::size_t i = 0; i < local.agents(); ++i) out[i] = grad.segment(local.offset(i), local.dim(i)).norm();
    return out;
}

/// One agent's half-space a^T v >= rhs.
struct AgentConstraint {
    Eigen::VectorXd a;
    double rhs = 0.0;
    double share = 1.0;
    double grad_norm = 0.0;
    Eigen::VectorXd grad_block;  // d b / d x_i
};

struct CliqueEval {
    double value = 0.0;
    double dbdt = 0.0;
    Eigen::VectorXd grad;
    std::vector<double> norms;
};

inline CliqueEval evaluate_clique(const CompositeBarrier& barrier, const StateLayout& local,
                                  const Eigen::VectorXd& xbar, double t) {
    auto ev = barrier.gradients(xbar, t);
    CliqueEval ce{ev.value, ev.dbdt, std::move(ev.grad_x), {}};
    ce.norms = block_norms(ce.grad, local);
    // Blocks at the zero threshold count as zero: the agent's constraint is
    // then vacuous instead of an ill-conditioned row with rhs of the same size.
    for (std::size_t i = 0; i < ce.norms.size(); ++i) {
        if (ce.norms[i] <= kZeroThreshold) {
            ce.grad.segment(local.offset(i), local.dim(i)).setZero();
            ce.norms[i] = 0.0;
        }
    }
    return ce;
}

/// Constraint of local member `i` given the clique evaluation. `f_u` is the
/// known secondary drift of that agent, if any.
inline AgentConstraint agent_constraint(const CliqueEval& ce, const StateLayout& local, const AgentModel& agent,
                                        const Eigen::VectorXd& x_i, double t, std::size_t i, double coupling_bound,
                                        double kappa, double n_hat, const Eigen::VectorXd* f_u = nullptr) {
    AgentConstraint c;
    c.grad_block = ce.grad.segment(local.offset(i), local.dim(i));
    c.grad_norm = ce.norms[i];
    c.share = load_share(ce.norms, i);
    c.a = agent.input_map(x_i, t).transpose() * c.grad_block;
    c.rhs = c.grad_norm * n_hat * coupling_bound - c.share * (ce.dbdt + kappa * ce.value) -
            c.grad_block.dot(agent.drift(x_i, t));
    if (f_u) c.rhs -= c.grad_block.dot(*f_u);
    return c;
}

/// Convenience form that evaluates the barrier itself.
inline AgentConstraint agent_constraint(const Clique& clique, const std::vector<AgentModel>& agents,
                                        const StateLayout& team_layout, const Eigen::VectorXd& xbar, double t,
                                        std::size_t i, const Eigen::VectorXd* f_u = nullptr) {
    const StateLayout local = team_layout.select(clique.members);
    const auto ce = evaluate_clique(clique.barrier, local, xbar, t);
    const double n_hat = noise_inflation(local.total(), team_layout.max_dim());
    const Eigen::VectorXd xi = xbar.segment(local.offset(i), local.dim(i));
    return agent_constraint(ce, local, agents.at(clique.members.at(i)), xi, t, i, clique.coupling_bound, clique.kappa,
                            n_hat, f_u);
}

/// argmin |u|^2 s.t. a^T u >= rhs.
inline Eigen::VectorXd solve_agent_qp(const Eigen::VectorXd& a, double rhs, double t = 0.0, std::size_t agent = 0) {
    if (!(rhs > 0.0)) return Eigen::VectorXd::Zero(a.size());
    const double n2 = a.squaredNorm();
    if (!(std::sqrt(n2) > kZeroThreshold)) throw InfeasibleQp(t, agent, rhs, std::sqrt(n2));
    return (rhs / n2) * a;
}

/// Team model shared by controller and simulator.
struct Team {
    StateLayout layout{std::vector<int>{}};
    std::vector<AgentModel> agents;
    std::vector<Clique> cliques;
    std::optional<SecondaryController> secondary;
    SecondaryMode secondary_mode = SecondaryMode::none;

    void validate() const {
        if (agents.size() != layout.agents()) throw std::invalid_argument("team: one model per agent");
        for (std::size_t i = 0; i < agents.size(); ++i)
            if (agents[i].state_dim() != layout.dim(i)) throw std::invalid_argument("team: agent dimension mismatch");
        std::vector<int> owner(agents.size(), -1);
        for (std::size_t k = 0; k < cliques.size(); ++k) {
            if (cliques[k].members.empty()) throw std::invalid_argument("team: empty clique");
            for (std::size_t m : cliques[k].members) {
                if (m >= agents.size()) throw std::invalid_argument("team: clique member out of range");
                if (owner[m] >= 0) throw std::invalid_argument("team: cliques overlap at agent " + std::to_string(m + 1));
                owner[m] = static_cast<int>(k);
            }
            if (cliques[k].barrier.dim() != layout.select(cliques[k].members).total())
                throw std::invalid_argument("team: barrier dimension does not match clique " + std::to_string(k + 1));
        }
        for (std::size_t i = 0; i < owner.size(); ++i)
            if (owner[i] < 0) throw std::invalid_argument("team: agent " + std::to_string(i + 1) + " is in no clique");
        if (secondary && secondary_mode != SecondaryMode::none) {
            // The repulsion must be computable from one clique's own state.
            std::set<int> ks;
            for (std::size_t j : secondary->group) {
                if (j >= agents.size()) throw std::invalid_argument("team: secondary group member out of range");
                ks.insert(owner[j]);
            }
            if (ks.size() > 1) throw std::invalid_argument("team: secondary group spans several cliques");
        }
    }

    std::size_t clique_of(std::size_t agent) const {
        for (std::size_t k = 0; k < cliques.size(); ++k)
            for (std::size_t m : cliques[k].members)
                if (m == agent) return k;
        throw std::out_of_range("agent in no clique");
    }
};

/// Per-step controller output.
struct TeamControl {
    std::vector<Eigen::VectorXd> input;       // applied u_i (secondary + QP part)
    std::vector<Eigen::VectorXd> qp_input;    // v_i
    std::vector<Eigen::VectorXd> secondary;   // f_u,i (zero if none)
    std::vector<Eigen::VectorXd> grad_block;  // d b^k / d x_i
    std::vector<double> residual;             // a^T v - rhs
    std::vector<double> share;
    std::vector<double> barrier;              // per clique, NaN once all tasks expired
};

/// Input of every member of clique k from the clique's own stacked state.
inline void clique_control(const Team& team, std::size_t k, const Eigen::VectorXd& xbar, double t, TeamControl& out) {
    const Clique& cl = team.cliques[k];
    const StateLayout local = team.layout.select(cl.members);
    auto state_of = [&](std::size_t global) -> Eigen::VectorXd {
        for (std::size_t i = 0; i < cl.members.size(); ++i)
            if (cl.members[i] == global) return xbar.segment(local.offset(i), local.dim(i));
        throw std::logic_error("secondary drift reads outside its clique");
    };
    const bool expired = cl.barrier.active_count(t) == 0;
    std::optional<CliqueEval> ce;
    if (!expired) ce = evaluate_clique(cl.barrier, local, xbar, t);
    out.barrier[k] = expired ? std::numeric_limits<double>::quiet_NaN() : ce->value;
    const double n_hat = noise_inflation(local.total(), team.layout.max_dim());
    for (std::size_t i = 0; i < cl.members.size(); ++i) {
        const std::size_t g = cl.members[i];
        const AgentModel& model = team.agents[g];
        const Eigen::VectorXd xi = xbar.segment(local.offset(i), local.dim(i));
        Eigen::VectorXd fu = Eigen::VectorXd::Zero(model.state_dim());
        if (team.secondary && team.secondary_mode != SecondaryMode::none && team.secondary->covers(g))
            fu = team.secondary->drift(g, state_of);
        Eigen::VectorXd v = Eigen::VectorXd::Zero(model.input_dim());
        if (!expired) {
            const bool known = team.secondary_mode == SecondaryMode::known;
            const auto c = agent_constraint(*ce, local, model, xi, t, i, cl.coupling_bound, cl.kappa, n_hat,
                                            known ? &fu : nullptr);
            v = solve_agent_qp(c.a, c.rhs, t, g);
            out.residual[g] = c.a.dot(v) - c.rhs;
            out.share[g] = c.share;
            out.grad_block[g] = c.grad_block;
        } else {
            out.residual[g] = std::numeric_limits<double>::quiet_NaN();
            out.share[g] = std::numeric_limits<double>::quiet_NaN();
            out.grad_block[g] = Eigen::VectorXd::Zero(model.state_dim());
        }
        out.secondary[g] = fu;
        out.qp_input[g] = v;
        out.input[g] = model.right_inverse() * fu + v;
    }
}

inline TeamControl team_control(const Team& team, const Eigen::VectorXd& x, double t) {
    const std::size_t m = team.agents.size();
    TeamControl out;
    out.input.resize(m);
    out.qp_input.resize(m);
    out.secondary.resize(m);
    out.grad_block.resize(m);
    out.residual.assign(m, 0.0);
    out.share.assign(m, 0.0);
    out.barrier.assign(team.cliques.size(), 0.0);
    for (std::size_t k = 0; k < team.cliques.size(); ++k)
        clique_control(team, k, team.layout.gather(x, team.cliques[k].members), t, out);
    return out;
}

}  // namespace stlcbf
