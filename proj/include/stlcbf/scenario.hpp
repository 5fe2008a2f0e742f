#pragma once

#include "stlcbf/controller.hpp"
#include "stlcbf/io.hpp"
#include "stlcbf/normalize.hpp"
#include "stlcbf/param_search.hpp"
#include "stlcbf/parser.hpp"
#include "stlcbf/sim.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace stlcbf {

enum class KappaSource { peak_scan, gain_bound, fixed };

struct AgentConfig {
    AgentModel model;
    Eigen::VectorXd x0;
};

struct CliqueConfig {
    std::vector<std::size_t> members;  // 0-based
    std::string formula_text;
    double coupling_bound = 0.0;
};

/// Parsed scenario file. `raw` keeps the source document for hashing.
struct ScenarioConfig {
    std::string name;
    std::vector<AgentConfig> agents;
    std::vector<CliqueConfig> cliques;
    CouplingSpec coupling;
    std::optional<SecondaryController> secondary;
    SecondaryMode secondary_mode = SecondaryMode::none;
    NoiseSpec noise;
    SearchConfig search;
    SimConfig sim;
    std::vector<std::uint64_t> seeds{0};
    KappaSource kappa_source = KappaSource::peak_scan;
    double kappa_fixed = 1.0;
    io::json raw;

    StateLayout layout() const {
        std::vector<int> dims;
        for (const auto& a : agents) dims.push_back(a.model.state_dim());
        return StateLayout(dims);
    }

    Eigen::VectorXd x0() const {
        Eigen::VectorXd x(layout().total());
        const auto lay = layout();
        for (std::size_t i = 0; i < agents.size(); ++i) x.segment(lay.offset(i), lay.dim(i)) = agents[i].x0;
        return x;
    }

    std::string hash() const { return io::config_hash(raw); }
};

namespace detail {

inline std::vector<std::size_t> agent_list(const io::json& j, std::size_t agents, const std::string& where) {
    std::vector<std::size_t> out;
    for (const auto& v : j) {
        const auto a = v.get<long>();
        if (a < 1 || static_cast<std::size_t>(a) > agents)
            throw std::invalid_argument(where + ": agent " + std::to_string(a) + " out of range");
        out.push_back(static_cast<std::size_t>(a - 1));
    }
    return out;
}

inline DriftSpec drift_from_json(const io::json& j) {
    const auto kind = j.value("kind", "zero");
    if (kind == "zero") return DriftSpec::zero();
    if (kind == "affine") return DriftSpec::affine(io::to_mat(j.at("A")), io::to_vec(j.at("c")));
    if (kind == "scripted") {
        std::vector<std::pair<double, Eigen::VectorXd>> tab;
        for (const auto& e : j.at("table")) tab.emplace_back(io::to_num(e.at(0)), io::to_vec(e.at(1)));
        return DriftSpec::scripted(std::move(tab));
    }
    throw std::invalid_argument("unknown drift kind \"" + kind + "\"");
}

inline InputMapSpec input_map_from_json(const io::json& j) {
    const auto kind = j.value("kind", "identity");
    if (kind == "identity") return InputMapSpec::identity();
    if (kind == "constant") return InputMapSpec::constant(io::to_mat(j.at("G")));
    throw std::invalid_argument("unknown input map kind \"" + kind + "\"");
}

template <class T>
void read_opt(const io::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

/// Schema: see README ("Scenario files"). Agent numbers are 1-based.
inline ScenarioConfig scenario_from_json(const io::json& j) {
    ScenarioConfig cfg;
    cfg.raw = j;
    cfg.name = j.value("name", "");
    for (const auto& a : j.at("agents")) {
        const int dim = a.at("dim").get<int>();
        AgentConfig ac{AgentModel(dim, detail::drift_from_json(a.value("drift", io::json::object())),
                                  detail::input_map_from_json(a.value("input_map", io::json::object()))),
                       io::to_vec(a.at("x0"))};
        if (ac.x0.size() != dim) throw std::invalid_argument("agent x0 has wrong dimension");
        cfg.agents.push_back(std::move(ac));
    }
    if (cfg.agents.empty()) throw std::invalid_argument("scenario has no agents");
    const auto m = cfg.agents.size();
    for (const auto& c : j.at("cliques")) {
        CliqueConfig cc{detail::agent_list(c.at("members"), m, "clique"), c.at("formula").get<std::string>(),
                        io::to_num(c.at("coupling_bound"))};
        if (cc.members.empty()) throw std::invalid_argument("clique has no members");
        if (!(cc.coupling_bound >= 0.0)) throw std::invalid_argument("coupling_bound must be >= 0");
        cfg.cliques.push_back(std::move(cc));
    }
    {
        std::vector<int> seen(m, 0);
        for (const auto& c : cfg.cliques)
            for (auto a : c.members)
                if (seen[a]++) throw std::invalid_argument("cliques overlap at agent " + std::to_string(a + 1));
        for (std::size_t a = 0; a < m; ++a)
            if (!seen[a]) throw std::invalid_argument("agent " + std::to_string(a + 1) + " is in no clique");
    }
    if (j.contains("coupling")) {
        const auto& c = j.at("coupling");
        const auto kind = c.value("kind", "none");
        if (kind == "none") {
            cfg.coupling.kind = CouplingSpec::Kind::none;
        } else if (kind == "saturating_attraction") {
            cfg.coupling.kind = CouplingSpec::Kind::saturating_attraction;
            cfg.coupling.attraction.resize(m);
            const auto& per = c.at("agents");
            if (per.size() != m) throw std::invalid_argument("coupling: one entry per agent");
            for (std::size_t i = 0; i < m; ++i)
                cfg.coupling.attraction[i] = {io::to_num(per[i].at("gain")),
                                              detail::agent_list(per[i].at("targets"), m, "coupling")};
        } else if (kind == "scripted") {
            cfg.coupling.kind = CouplingSpec::Kind::scripted;
            for (const auto& tab : c.at("tables")) {
                std::vector<std::pair<double, Eigen::VectorXd>> t;
                for (const auto& e : tab) t.emplace_back(io::to_num(e.at(0)), io::to_vec(e.at(1)));
                cfg.coupling.table.push_back(std::move(t));
            }
        } else {
            throw std::invalid_argument("unknown coupling kind \"" + kind + "\"");
        }
    }
    if (j.contains("secondary")) {
        const auto& s = j.at("secondary");
        const auto mode = s.value("mode", "none");
        if (mode == "none") cfg.secondary_mode = SecondaryMode::none;
        else if (mode == "known") cfg.secondary_mode = SecondaryMode::known;
        else if (mode == "unknown") cfg.secondary_mode = SecondaryMode::unknown;
        else throw std::invalid_argument("secondary.mode must be none, known or unknown");
        if (cfg.secondary_mode != SecondaryMode::none)
            cfg.secondary = SecondaryController{detail::agent_list(s.at("group"), m, "secondary"), s.value("gain", 1.0),
                                                s.value("regularizer", 0.01)};
    }
    if (j.contains("noise")) {
        const auto& n = j.at("noise");
        const auto kind = n.value("kind", "none");
        if (kind == "none") cfg.noise.kind = NoiseSpec::Kind::none;
        else if (kind == "uniform_ball") cfg.noise.kind = NoiseSpec::Kind::uniform_ball;
        else if (kind == "adversarial") cfg.noise.kind = NoiseSpec::Kind::adversarial;
        else throw std::invalid_argument("noise.kind must be none, uniform_ball or adversarial");
        cfg.noise.bound = n.value("bound", 0.0);
        cfg.noise.hold = n.value("hold", 0.0);
        if (cfg.noise.bound < 0.0 || cfg.noise.hold < 0.0) throw std::invalid_argument("noise bound/hold must be >= 0");
    }
    if (j.contains("search")) {
        const auto& s = j.at("search");
        auto& sc = cfg.search;
        detail::read_opt(s, "delta", sc.delta);
        detail::read_opt(s, "eta_grid", sc.eta_grid);
        detail::read_opt(s, "restarts", sc.restarts);
        detail::read_opt(s, "r_tolerance", sc.r_tolerance);
        detail::read_opt(s, "gamma0_fractions", sc.gamma0_fractions);
        detail::read_opt(s, "gamma_inf_fractions", sc.gamma_inf_fractions);
        detail::read_opt(s, "gamma0_depth", sc.gamma0_depth);
        detail::read_opt(s, "headroom_factor", sc.headroom_factor);
        detail::read_opt(s, "coordinate_sweeps", sc.coordinate_sweeps);
        detail::read_opt(s, "max_ascent_iterations", sc.max_ascent_iterations);
        detail::read_opt(s, "ascent_tolerance", sc.ascent_tolerance);
        detail::read_opt(s, "seed", sc.seed);
        detail::read_opt(s, "kappa_floor", sc.kappa_floor);
        detail::read_opt(s, "kappa_cap", sc.kappa_cap);
        detail::read_opt(s, "kappa_scan_points", sc.kappa_scan_points);
    }
    cfg.search.validate();
    if (j.contains("sim")) {
        const auto& s = j.at("sim");
        detail::read_opt(s, "dt", cfg.sim.dt);
        detail::read_opt(s, "horizon", cfg.sim.horizon);
        detail::read_opt(s, "seeds", cfg.seeds);
        if (!(cfg.sim.dt > 0.0)) throw std::invalid_argument("sim.dt must be positive");
        if (cfg.seeds.empty()) throw std::invalid_argument("sim.seeds must not be empty");
    }
    cfg.noise.seed = cfg.seeds.front();
    if (j.contains("controller")) {
        const auto& c = j.at("controller");
        const auto src = c.value("kappa_source", "peak_scan");
        if (src == "peak_scan") cfg.kappa_source = KappaSource::peak_scan;
        else if (src == "gain_bound") cfg.kappa_source = KappaSource::gain_bound;
        else if (src == "fixed") cfg.kappa_source = KappaSource::fixed;
        else throw std::invalid_argument("controller.kappa_source must be peak_scan, gain_bound or fixed");
        cfg.kappa_fixed = c.value("kappa", 1.0);
    }
    // Formulas must parse and stay inside their clique.
    const auto lay = cfg.layout();
    for (const auto& c : cfg.cliques) {
        const Formula f = parse(c.formula_text, lay);
        if (!f.is_task_formula()) throw SemanticError("clique formula is not a task formula");
        const auto cols = lay.columns(c.members);
        for (const auto& u : normalize(f)) (void)u.predicate.restricted(cols);
    }
    return cfg;
}

/// The four-agent scenario shipped with the `demo` subcommand.
inline const char* demo_scenario_text() {
    return R"json({
  "name": "four-agent demo",
  "agents": [
    {"dim": 2, "x0": [1.5, 4.5]},
    {"dim": 2, "x0": [0.5, 6.0]},
    {"dim": 2, "x0": [0.5, 3.0]},
    {"dim": 2, "x0": [9.5, 1.5]}
  ],
  "cliques": [
    {"members": [1, 2, 3], "coupling_bound": 2.81,
     "formula": "G[5,10](norm_inf(x1 - [2.5,7]) <= 0.5) & ((norm_inf(x2 - x1 - [-1,1]) <= 0.5) & (norm_inf(x3 - x1 - [-1,-1]) <= 0.5)) U[10,20] (norm_inf(x1 - [8,6]) <= 0.5)"},
    {"members": [4], "coupling_bound": 0.81,
     "formula": "F[5,10](norm_inf(x4 - [9,1]) <= 1) & G[0,10](x4[1] >= 8) & F[15,20](norm_inf(x4 - [1,1]) <= 1) & G[10,20](x4[2] <= 2)"}
  ],
  "coupling": {"kind": "saturating_attraction", "agents": [
    {"gain": 0.5, "targets": [4]},
    {"gain": 0.5, "targets": [4]},
    {"gain": 0.5, "targets": [4]},
    {"gain": 0.25, "targets": [1, 2]}
  ]},
  "secondary": {"mode": "unknown", "group": [1, 2, 3], "gain": 1.0, "regularizer": 0.01},
  "noise": {"kind": "uniform_ball", "bound": 0.1, "hold": 0.0},
  "search": {"delta": 0.05, "eta_grid": [20], "restarts": 3, "r_tolerance": 0.001, "seed": 1},
  "sim": {"dt": 0.005, "seeds": [0, 1, 2, 3, 4, 5, 6, 7, 8, 9]},
  "controller": {"kappa_source": "peak_scan"}
})json";
}

inline ScenarioConfig demo_scenario() { return scenario_from_json(io::json::parse(demo_scenario_text())); }

/// Units of a clique formula restricted to the clique's stacked state.
inline std::vector<OperatorUnit> clique_units(const ScenarioConfig& cfg, std::size_t k) {
    const auto lay = cfg.layout();
    auto units = normalize(parse(cfg.cliques.at(k).formula_text, lay));
    const auto cols = lay.columns(cfg.cliques[k].members);
    for (auto& u : units) u.predicate = u.predicate.restricted(cols);
    return units;
}

struct Construction {
    std::string config_hash;
    std::vector<SearchResult> cliques;

    bool feasible() const {
        for (const auto& c : cliques)
            if (!c.feasible) return false;
        return !cliques.empty();
    }
};

inline Construction construct(const ScenarioConfig& cfg) {
    Construction out{cfg.hash(), {}};
    const auto lay = cfg.layout();
    const auto x0 = cfg.x0();
    for (std::size_t k = 0; k < cfg.cliques.size(); ++k)
        out.cliques.push_back(maximize_r(clique_units(cfg, k), lay.gather(x0, cfg.cliques[k].members), cfg.search));
    return out;
}

inline io::json to_json(const Construction& c, const ScenarioConfig& cfg) {
    io::json cl = io::json::array();
    for (std::size_t k = 0; k < c.cliques.size(); ++k) {
        auto j = io::to_json(c.cliques[k]);
        std::vector<std::size_t> one_based;
        for (auto a : cfg.cliques[k].members) one_based.push_back(a + 1);
        j["members"] = one_based;
        cl.push_back(std::move(j));
    }
    return {{"format", io::kBarrierFormat}, {"config_hash", c.config_hash}, {"cliques", cl}};
}

inline Construction construction_from_json(const io::json& j) {
    if (j.value("format", "") != io::kBarrierFormat)
        throw std::invalid_argument("not a " + std::string(io::kBarrierFormat) + " document");
    Construction c{j.at("config_hash").get<std::string>(), {}};
    for (const auto& r : j.at("cliques")) c.cliques.push_back(io::search_result_from_json(r));
    return c;
}

inline double operative_kappa(const ScenarioConfig& cfg, const SearchResult& r) {
    switch (cfg.kappa_source) {
        case KappaSource::peak_scan: return r.kappa_scan;
        case KappaSource::gain_bound: return r.kappa_bound.kappa;
        case KappaSource::fixed: return cfg.kappa_fixed;
    }
    return r.kappa_scan;
}

/// Closed-loop world for one noise seed. Throws if the construction does
/// not belong to this config or is infeasible.
inline World make_world(const ScenarioConfig& cfg, const Construction& c, std::uint64_t seed) {
    if (c.config_hash != cfg.hash()) throw std::invalid_argument("barrier document was produced from a different config");
    if (c.cliques.size() != cfg.cliques.size()) throw std::invalid_argument("barrier document has wrong clique count");
    if (!c.feasible()) throw std::invalid_argument("construction is infeasible; nothing to simulate");
    World w;
    w.team.layout = cfg.layout();
    for (const auto& a : cfg.agents) w.team.agents.push_back(a.model);
    for (std::size_t k = 0; k < cfg.cliques.size(); ++k) {
        const auto& r = c.cliques[k];
        Clique cl;
        cl.members = cfg.cliques[k].members;
        cl.barrier = r.barrier;
        cl.coupling_bound = cfg.cliques[k].coupling_bound;
        cl.kappa = operative_kappa(cfg, r);
        cl.formula = parse(cfg.cliques[k].formula_text, w.team.layout);
        cl.r_star = r.r_star;
        w.team.cliques.push_back(std::move(cl));
    }
    w.team.secondary = cfg.secondary;
    w.team.secondary_mode = cfg.secondary_mode;
    w.coupling = cfg.coupling;
    w.noise = cfg.noise;
    w.noise.seed = seed;
    w.x0 = cfg.x0();
    w.team.validate();
    return w;
}

}  // namespace stlcbf
