#pragma once

#include "stlcbf/controller.hpp"
#include "stlcbf/error.hpp"
#include "stlcbf/robustness.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace stlcbf {

/// Componentwise clamp to [-1, 1].
inline Eigen::VectorXd sat1(const Eigen::VectorXd& v) { return v.cwiseMax(-1.0).cwiseMin(1.0); }

/// Known inter-agent coupling c_i(x, t).
struct CouplingSpec {
    enum class Kind { none, saturating_attraction, scripted };

    /// c_i = gain * sum_{j in targets} sat1(x_j - x_i)
    struct Attraction {
        double gain = 0.0;
        std::vector<std::size_t> targets;
    };

    Kind kind = Kind::none;
    std::vector<Attraction> attraction;  // per agent
    /// Per agent piecewise-constant table (time, value), like scripted drift.
    std::vector<std::vector<std::pair<double, Eigen::VectorXd>>> table;

    Eigen::VectorXd eval(std::size_t agent, const Eigen::VectorXd& x, const StateLayout& layout, double t) const {
        const int n = layout.dim(agent);
        switch (kind) {
            case Kind::none: return Eigen::VectorXd::Zero(n);
            case Kind::saturating_attraction: {
                Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
                if (agent >= attraction.size()) return out;
                const auto& a = attraction[agent];
                const auto xi = x.segment(layout.offset(agent), n);
                for (std::size_t j : a.targets) out += sat1(x.segment(layout.offset(j), layout.dim(j)) - xi);
                return a.gain * out;
            }
            case Kind::scripted: {
                if (agent >= table.size()) return Eigen::VectorXd::Zero(n);
                const auto& tab = table[agent];
                auto it = std::upper_bound(tab.begin(), tab.end(), t, [](double v, const auto& e) { return v < e.first; });
                if (it == tab.begin()) return Eigen::VectorXd::Zero(n);
                return std::prev(it)->second;
            }
        }
        return Eigen::VectorXd::Zero(n);
    }
};

struct NoiseSpec {
    enum class Kind { none, uniform_ball, adversarial };
    Kind kind = Kind::none;
    double bound = 0.0;
    std::uint64_t seed = 0;
    /// Noise is held over [k hold, (k+1) hold); 0 means one draw per step.
    double hold = 0.0;
};

/// Seeded uniform-in-ball draws, indexed by (hold slot, agent) so that the
/// realization does not depend on the step size.
class NoiseSource {
public:
    NoiseSource(const NoiseSpec& spec, std::vector<int> dims) : spec_(spec), dims_(std::move(dims)), rng_(spec.seed) {}

    Eigen::VectorXd draw(std::size_t slot, std::size_t agent) {
        while (cache_.size() <= slot) {
            std::vector<Eigen::VectorXd> row;
            for (int d : dims_) row.push_back(sample_ball(d));
            cache_.push_back(std::move(row));
        }
        return cache_[slot][agent];
    }

private:
    Eigen::VectorXd sample_ball(int d) {
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        Eigen::VectorXd v(d);
        double n = 0.0;
        do {
            for (int c = 0; c < d; ++c) v(c) = gauss(rng_);
            n = v.norm();
        } while (!(n > 0.0));
        const double radius = spec_.bound * std::pow(unif(rng_), 1.0 / d);
        return v * (radius / n);
    }

    NoiseSpec spec_;
    std::vector<int> dims_;
    std::mt19937_64 rng_;
    std::vector<std::vector<Eigen::VectorXd>> cache_;
};

struct SimConfig {
    double dt = 0.005;
    /// 0 means the largest clique horizon.
    double horizon = 0.0;
    bool check_coupling_bound = true;
};

struct LogEvent {
    enum class Kind { switch_instant, infeasible, coupling_violation };
    Kind kind = Kind::switch_instant;
    double t = 0.0;
    std::size_t step = 0;
    int clique = -1;  // 0-based, -1 if not applicable
    int agent = -1;   // 0-based, -1 if not applicable
    std::string message;
};

/// One row per grid time. The last row is the final state; its inputs are
/// zero and its barrier/residual entries NaN.
struct TrajectoryLog {
    StateLayout layout;
    std::size_t cliques = 0;
    double dt = 0.0;
    std::vector<double> times;
    std::vector<Eigen::VectorXd> states;
    std::vector<std::vector<Eigen::VectorXd>> inputs;  // [step][agent]
    std::vector<std::vector<double>> barrier;          // [step][clique]
    std::vector<std::vector<double>> residual;         // [step][agent]
    std::vector<std::vector<double>> share;            // [step][agent]
    std::vector<std::vector<double>> disturbance;      // [step][agent] |unmodeled part|
    std::vector<LogEvent> events;

    std::size_t size() const noexcept { return times.size(); }

    SampledSignal signal() const { return {times, states}; }
};

struct RunResult {
    TrajectoryLog log;
    bool completed = false;
    std::string error;
    std::optional<std::size_t> failed_step;
};

struct World {
    Team team;
    CouplingSpec coupling;
    NoiseSpec noise;
    Eigen::VectorXd x0;
};

inline double team_horizon(const Team& team) {
    double h = 0.0;
    for (const auto& c : team.cliques) h = std::max(h, c.barrier.horizon());
    return h;
}

namespace detail {

inline Eigen::VectorXd unit_or_zero(const Eigen::VectorXd& v) {
    const double n = v.norm();
    return n > kZeroThreshold ? Eigen::VectorXd(v / n) : Eigen::VectorXd::Zero(v.size());
}

}  // namespace detail

/// Explicit Euler integration of the closed loop from x0 over [0, horizon].
inline RunResult run(const World& world, const SimConfig& cfg = {}) {
    const Team& team = world.team;
    team.validate();
    if (!(cfg.dt > 0.0)) throw std::invalid_argument("sim: dt must be positive");
    if (world.x0.size() != team.layout.total()) throw std::invalid_argument("sim: x0 has wrong dimension");
    if (world.noise.bound < 0.0) throw std::invalid_argument("sim: negative noise bound");
    const double horizon = cfg.horizon > 0.0 ? cfg.horizon : team_horizon(team);
    const auto steps = static_cast<std::size_t>(std::ceil(horizon / cfg.dt - 1e-9));
    const std::size_t m = team.agents.size();

    RunResult res;
    TrajectoryLog& log = res.log;
    log.layout = team.layout;
    log.cliques = team.cliques.size();
    log.dt = cfg.dt;

    NoiseSource noise(world.noise, team.layout.dims());
    Eigen::VectorXd x = world.x0;
    std::vector<std::size_t> next_switch(team.cliques.size(), 0);

    auto push_row = [&](double t, const Eigen::VectorXd& state) {
        log.times.push_back(t);
        log.states.push_back(state);
    };

    for (std::size_t k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * cfg.dt;
        for (std::size_t c = 0; c < team.cliques.size(); ++c) {
            const auto& sched = team.cliques[c].barrier.schedule();
            while (next_switch[c] < sched.size() && sched[next_switch[c]] <= t + 1e-12) {
                log.events.push_back({LogEvent::Kind::switch_instant, sched[next_switch[c]], k, static_cast<int>(c), -1,
                                      "deadline " + std::to_string(sched[next_switch[c]])});
                ++next_switch[c];
            }
        }
        TeamControl ctl;
        try {
            ctl = team_control(team, x, t);
        } catch (const InfeasibleQp& e) {
            log.events.push_back({LogEvent::Kind::infeasible, t, k, static_cast<int>(team.clique_of(e.agent())),
                                  static_cast<int>(e.agent()), e.what()});
            push_row(t, x);
            log.inputs.emplace_back();
            log.barrier.emplace_back(team.cliques.size(), std::numeric_limits<double>::quiet_NaN());
            log.residual.emplace_back(m, std::numeric_limits<double>::quiet_NaN());
            log.share.emplace_back(m, std::numeric_limits<double>::quiet_NaN());
            log.disturbance.emplace_back(m, std::numeric_limits<double>::quiet_NaN());
            log.inputs.back().resize(m);
            for (std::size_t i = 0; i < m; ++i) log.inputs.back()[i] = Eigen::VectorXd::Zero(team.agents[i].input_dim());
            res.error = e.what();
            res.failed_step = k;
            return res;
        }

        const std::size_t slot = world.noise.hold > 0.0
                                     ? static_cast<std::size_t>(std::floor(t / world.noise.hold + 1e-9))
                                     : k;
        Eigen::VectorXd xn = x;
        std::vector<double> dist(m, 0.0);
        std::optional<LogEvent> violation;
        for (std::size_t i = 0; i < m; ++i) {
            const AgentModel& model = team.agents[i];
            const auto seg = x.segment(team.layout.offset(i), model.state_dim());
            Eigen::VectorXd w = Eigen::VectorXd::Zero(model.state_dim());
            switch (world.noise.kind) {
                case NoiseSpec::Kind::none: break;
                case NoiseSpec::Kind::uniform_ball: w = noise.draw(slot, i); break;
                case NoiseSpec::Kind::adversarial: w = -world.noise.bound * detail::unit_or_zero(ctl.grad_block[i]); break;
            }
            const Eigen::VectorXd c = world.coupling.eval(i, x, team.layout, t);
            Eigen::VectorXd unmodeled = c + w;
            if (team.secondary_mode == SecondaryMode::unknown) unmodeled += ctl.secondary[i];
            dist[i] = unmodeled.norm();
            const std::size_t ck = team.clique_of(i);
            const double bound = team.cliques[ck].coupling_bound;
            if (cfg.check_coupling_bound && dist[i] > bound * (1.0 + 1e-12) + 1e-12 && !violation)
                violation = LogEvent{LogEvent::Kind::coupling_violation, t, k, static_cast<int>(ck), static_cast<int>(i),
                                     CouplingBoundViolation(t, i, dist[i], bound).what()};
            xn.segment(team.layout.offset(i), model.state_dim()) +=
                cfg.dt * (model.drift(seg, t) + model.input_map(seg, t) * ctl.input[i] + c + w);
        }
        push_row(t, x);
        log.inputs.push_back(ctl.input);
        log.barrier.push_back(ctl.barrier);
        log.residual.push_back(ctl.residual);
        log.share.push_back(ctl.share);
        log.disturbance.push_back(dist);
        if (violation) {
            log.events.push_back(*violation);
            res.error = violation->message;
            res.failed_step = k;
            return res;
        }
        x = std::move(xn);
    }
    push_row(static_cast<double>(steps) * cfg.dt, x);
    log.inputs.emplace_back();
    for (std::size_t i = 0; i < m; ++i) log.inputs.back().push_back(Eigen::VectorXd::Zero(team.agents[i].input_dim()));
    log.barrier.emplace_back(team.cliques.size(), std::numeric_limits<double>::quiet_NaN());
    log.residual.emplace_back(m, std::numeric_limits<double>::quiet_NaN());
    log.share.emplace_back(m, std::numeric_limits<double>::quiet_NaN());
    log.disturbance.emplace_back(m, std::numeric_limits<double>::quiet_NaN());
    res.completed = true;
    return res;
}

struct CliqueVerdict {
    double min_barrier = std::numeric_limits<double>::infinity();
    double robustness = 0.0;
    double r_star = 0.0;
    double max_speed = 0.0;  // L: largest stacked-clique state speed on the log
    double tol_robustness = 0.0;
    bool pass = false;
};

struct VerifyReport {
    std::vector<CliqueVerdict> cliques;
    double team_robustness = 0.0;  // of the conjunction of all clique tasks
    bool pass = false;
};

/// Per clique: min barrier over the log, monitored robustness, and pass iff
/// min b >= -tol_barrier and rho >= r_star - 2 dt L.
inline VerifyReport verify(const TrajectoryLog& log, const std::vector<Clique>& cliques, double tol_barrier = 1e-3,
                           UntilSemantics until = UntilSemantics::window_start) {
    VerifyReport rep;
    rep.pass = true;
    const SampledSignal sig = log.signal();
    std::vector<Formula> all;
    for (std::size_t k = 0; k < cliques.size(); ++k) {
        CliqueVerdict v;
        const auto& cl = cliques[k];
        for (const auto& row : log.barrier)
            if (k < row.size() && !std::isnan(row[k])) v.min_barrier = std::min(v.min_barrier, row[k]);
        const auto cols = log.layout.columns(cl.members);
        for (std::size_t s = 1; s < log.size(); ++s) {
            double sq = 0.0;
            for (auto c : cols) sq += std::pow(log.states[s](c) - log.states[s - 1](c), 2);
            v.max_speed = std::max(v.max_speed, std::sqrt(sq) / (log.times[s] - log.times[s - 1]));
        }
        try {
            v.robustness = robustness(cl.formula, sig, 0.0, until);
        } catch (const WindowError&) {
            v.robustness = -std::numeric_limits<double>::infinity();  // log ends before the task horizon
        }
        v.r_star = cl.r_star;
        v.tol_robustness = 2.0 * log.dt * v.max_speed;
        v.pass = v.min_barrier >= -tol_barrier && v.robustness >= v.r_star - v.tol_robustness;
        rep.pass = rep.pass && v.pass;
        rep.cliques.push_back(v);
        all.push_back(cl.formula);
    }
    try {
        rep.team_robustness = robustness(Formula::conjunction(all), sig, 0.0, until);
    } catch (const WindowError&) {
        rep.team_robustness = -std::numeric_limits<double>::infinity();
    }
    return rep;
}

}  // namespace stlcbf
