#pragma once

#include "stlcbf/barrier.hpp"
#include "stlcbf/error.hpp"
#include "stlcbf/param_search.hpp"
#include "stlcbf/robustness.hpp"
#include "stlcbf/sim.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace stlcbf::io {

using json = nlohmann::json;

inline constexpr const char* kBarrierFormat = "stlcbf-barrier/1";
inline constexpr const char* kLogFormat = "stlcbf-log/1";

// Non-finite doubles are written as null (inf) or the strings "-inf"/"nan".
inline json num(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? json(nullptr) : json("-inf");
}

inline double to_num(const json& j) {
    if (j.is_null()) return std::numeric_limits<double>::infinity();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
        throw std::invalid_argument("expected a number, got \"" + s + "\"");
    }
    return j.get<double>();
}

inline json vec(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
    return a;
}

inline Eigen::VectorXd to_vec(const json& j) {
    if (!j.is_array()) throw std::invalid_argument("expected an array of numbers");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = to_num(j[i]);
    return v;
}

inline json mat(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vec(m.row(r).transpose()));
    return rows;
}

inline Eigen::MatrixXd to_mat(const json& j) {
    if (!j.is_array() || j.empty()) throw std::invalid_argument("expected a non-empty array of rows");
    const auto cols = j[0].size();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (j[r].size() != cols) throw std::invalid_argument("ragged matrix");
        m.row(static_cast<Eigen::Index>(r)) = to_vec(j[r]).transpose();
    }
    return m;
}

/// 64-bit FNV-1a of the canonical (sorted-key, compact) dump.
inline std::string config_hash(const json& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : config.dump()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

inline json to_json(const Predicate& p) {
    if (p.is_affine()) return {{"form", "affine"}, {"coeffs", vec(p.coeffs())}, {"offset", p.offset()}};
    return {{"form", "quad_ball"}, {"A", mat(p.center_map())}, {"b", vec(p.shift())}, {"level", p.level()}};
}

inline Predicate predicate_from_json(const json& j) {
    const auto form = j.at("form").get<std::string>();
    if (form == "affine") return Predicate::affine(to_vec(j.at("coeffs")), to_num(j.at("offset")));
    if (form == "quad_ball") return Predicate::quad_ball(to_mat(j.at("A")), to_vec(j.at("b")), to_num(j.at("level")));
    throw std::invalid_argument("unknown predicate form \"" + form + "\"");
}

inline json to_json(const GammaParams& g) {
    return {{"gamma0", g.gamma0}, {"gamma_inf", g.gamma_inf}, {"decay", g.decay}, {"t_star", g.t_star}};
}

inline GammaParams gamma_from_json(const json& j) {
    return {to_num(j.at("gamma0")), to_num(j.at("gamma_inf")), to_num(j.at("decay")), to_num(j.at("t_star"))};
}

inline json to_json(const OperatorUnit& u) {
    return {{"kind", u.kind == UnitKind::always ? "G" : "F"},
            {"interval", {u.interval.lo, u.interval.hi}},
            {"predicate", to_json(u.predicate)}};
}

inline OperatorUnit unit_from_json(const json& j) {
    const auto k = j.at("kind").get<std::string>();
    if (k != "G" && k != "F") throw std::invalid_argument("unit kind must be G or F");
    const auto& iv = j.at("interval");
    Interval interval{to_num(iv.at(0)), to_num(iv.at(1))};
    check_interval(interval);
    return {k == "G" ? UnitKind::always : UnitKind::eventually, predicate_from_json(j.at("predicate")), interval};
}

inline json to_json(const CompositeBarrier& b) {
    json terms = json::array();
    for (const auto& t : b.terms())
        terms.push_back({{"unit", to_json(t.unit)}, {"gamma", to_json(t.gamma)}, {"h_cap", num(t.h_cap)}});
    return {{"eta", b.eta()}, {"bound_radius", b.bound_radius()}, {"terms", terms}};
}

inline CompositeBarrier barrier_from_json(const json& j) {
    std::vector<BarrierTerm> terms;
    for (const auto& t : j.at("terms"))
        terms.push_back({unit_from_json(t.at("unit")), gamma_from_json(t.at("gamma")), to_num(t.at("h_cap"))});
    return CompositeBarrier(std::move(terms), to_num(j.at("eta")), to_num(j.at("bound_radius")));
}

inline json to_json(const KappaBound& k) {
    return {{"kappa", k.kappa}, {"log_neg_zeta", num(k.log_neg_zeta)}, {"delta_max", k.delta_max},
            {"b_max", k.b_max}, {"clamped", k.clamped}, {"floored", k.floored}};
}

inline KappaBound kappa_bound_from_json(const json& j) {
    KappaBound k;
    k.kappa = to_num(j.at("kappa"));
    k.log_neg_zeta = to_num(j.at("log_neg_zeta"));
    k.delta_max = to_num(j.at("delta_max"));
    k.b_max = to_num(j.at("b_max"));
    k.clamped = j.at("clamped").get<bool>();
    k.floored = j.at("floored").get<bool>();
    return k;
}

inline json to_json(const SearchResult& r) {
    json w = json::array();
    for (const auto& x : r.witnesses) w.push_back(vec(x));
    const auto& d = r.diagnostics;
    json diag = {{"eta", d.eta},
                 {"initial_margin", num(d.initial_margin)},
                 {"switch_margins", json::array()},
                 {"witness_gradient_norms", json::array()},
                 {"witness_bound_weights", json::array()},
                 {"r_upper", num(d.r_upper)},
                 {"feasibility_checks", d.feasibility_checks},
                 {"warnings", d.warnings}};
    for (double v : d.switch_margins) diag["switch_margins"].push_back(num(v));
    for (double v : d.witness_gradient_norms) diag["witness_gradient_norms"].push_back(num(v));
    for (double v : d.witness_bound_weights) diag["witness_bound_weights"].push_back(num(v));
    json out = {{"feasible", r.feasible}, {"r_star", r.r_star}, {"delta", r.delta}, {"diagnostics", diag}};
    if (r.feasible) {
        out["barrier"] = to_json(r.barrier);
        out["witnesses"] = w;
        out["kappa_bound"] = to_json(r.kappa_bound);
        out["kappa_scan"] = r.kappa_scan;
        out["gamma_choice"] = {{"gamma0_index", r.choice.gamma0_index}, {"gamma_inf_index", r.choice.gamma_inf_index}};
    }
    return out;
}

inline SearchResult search_result_from_json(const json& j) {
    SearchResult r;
    r.feasible = j.at("feasible").get<bool>();
    r.r_star = to_num(j.at("r_star"));
    r.delta = to_num(j.at("delta"));
    const auto& d = j.at("diagnostics");
    r.diagnostics.eta = to_num(d.at("eta"));
    r.diagnostics.initial_margin = to_num(d.at("initial_margin"));
    for (const auto& v : d.at("switch_margins")) r.diagnostics.switch_margins.push_back(to_num(v));
    for (const auto& v : d.at("witness_gradient_norms")) r.diagnostics.witness_gradient_norms.push_back(to_num(v));
    for (const auto& v : d.at("witness_bound_weights")) r.diagnostics.witness_bound_weights.push_back(to_num(v));
    r.diagnostics.r_upper = to_num(d.at("r_upper"));
    r.diagnostics.feasibility_checks = d.at("feasibility_checks").get<long>();
    r.diagnostics.warnings = d.at("warnings").get<std::vector<std::string>>();
    if (r.feasible) {
        r.barrier = barrier_from_json(j.at("barrier"));
        for (const auto& w : j.at("witnesses")) r.witnesses.push_back(to_vec(w));
        r.kappa_bound = kappa_bound_from_json(j.at("kappa_bound"));
        r.kappa_scan = to_num(j.at("kappa_scan"));
        r.choice.gamma0_index = j.at("gamma_choice").at("gamma0_index").get<std::vector<int>>();
        r.choice.gamma_inf_index = j.at("gamma_choice").at("gamma_inf_index").get<std::vector<int>>();
    }
    return r;
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path);
}

// ---- trajectory log ------------------------------------------------------

namespace detail {

inline std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

}  // namespace detail

/// Column order: t, x{i}_{c}..., u{i}_{c}..., b{k}..., res{i}..., share{i}...,
/// dist{i}... (agents, components and cliques 1-based).
inline std::vector<std::string> log_columns(const TrajectoryLog& log, const std::vector<int>& input_dims) {
    std::vector<std::string> cols{"t"};
    const auto m = log.layout.agents();
    for (std::size_t i = 0; i < m; ++i)
        for (int c = 0; c < log.layout.dim(i); ++c) cols.push_back("x" + std::to_string(i + 1) + "_" + std::to_string(c + 1));
    for (std::size_t i = 0; i < m; ++i)
        for (int c = 0; c < input_dims[i]; ++c) cols.push_back("u" + std::to_string(i + 1) + "_" + std::to_string(c + 1));
    for (std::size_t k = 0; k < log.cliques; ++k) cols.push_back("b" + std::to_string(k + 1));
    for (const char* p : {"res", "share", "dist"})
        for (std::size_t i = 0; i < m; ++i) cols.push_back(p + std::to_string(i + 1));
    return cols;
}

inline void write_log_csv(std::ostream& out, const TrajectoryLog& log) {
    const auto m = log.layout.agents();
    std::vector<int> udims(m, 0);
    for (const auto& row : log.inputs)
        for (std::size_t i = 0; i < row.size() && i < m; ++i) udims[i] = std::max(udims[i], static_cast<int>(row[i].size()));
    const auto cols = log_columns(log, udims);
    for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
    out << '\n';
    for (std::size_t s = 0; s < log.size(); ++s) {
        out << detail::fmt(log.times[s]);
        for (Eigen::Index c = 0; c < log.states[s].size(); ++c) out << ',' << detail::fmt(log.states[s](c));
        for (std::size_t i = 0; i < m; ++i)
            for (int c = 0; c < udims[i]; ++c)
                out << ',' << detail::fmt(c < log.inputs[s][i].size() ? log.inputs[s][i](c) : 0.0);
        for (double v : log.barrier[s]) out << ',' << detail::fmt(v);
        for (double v : log.residual[s]) out << ',' << detail::fmt(v);
        for (double v : log.share[s]) out << ',' << detail::fmt(v);
        for (double v : log.disturbance[s]) out << ',' << detail::fmt(v);
        out << '\n';
    }
}

inline const char* event_name(LogEvent::Kind k) {
    switch (k) {
        case LogEvent::Kind::switch_instant: return "switch";
        case LogEvent::Kind::infeasible: return "infeasible";
        case LogEvent::Kind::coupling_violation: return "coupling_violation";
    }
    return "unknown";
}

inline LogEvent::Kind event_kind(const std::string& s) {
    if (s == "switch") return LogEvent::Kind::switch_instant;
    if (s == "infeasible") return LogEvent::Kind::infeasible;
    if (s == "coupling_violation") return LogEvent::Kind::coupling_violation;
    throw std::invalid_argument("unknown log event \"" + s + "\"");
}

/// Structured log document. `extra` is merged at top level (r_star, seed, ...).
inline json log_to_json(const TrajectoryLog& log, const json& extra = json::object()) {
    auto rows_of = [](const std::vector<std::vector<double>>& rows) {
        json a = json::array();
        for (const auto& r : rows) {
            json row = json::array();
            for (double v : r) row.push_back(num(v));
            a.push_back(std::move(row));
        }
        return a;
    };
    json states = json::array(), inputs = json::array(), events = json::array();
    for (const auto& x : log.states) states.push_back(vec(x));
    for (const auto& row : log.inputs) {
        json r = json::array();
        for (const auto& u : row) r.push_back(vec(u));
        inputs.push_back(std::move(r));
    }
    for (const auto& e : log.events)
        events.push_back({{"kind", event_name(e.kind)}, {"t", e.t}, {"step", e.step}, {"clique", e.clique},
                          {"agent", e.agent}, {"message", e.message}});
    json j = {{"format", kLogFormat},
              {"dims", log.layout.dims()},
              {"cliques", log.cliques},
              {"dt", log.dt},
              {"times", log.times},
              {"states", states},
              {"inputs", inputs},
              {"barrier", rows_of(log.barrier)},
              {"residual", rows_of(log.residual)},
              {"share", rows_of(log.share)},
              {"disturbance", rows_of(log.disturbance)},
              {"events", events}};
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
    return j;
}

inline TrajectoryLog log_from_json(const json& j) {
    if (j.value("format", "") != kLogFormat) throw std::invalid_argument("not a " + std::string(kLogFormat) + " document");
    auto rows_from = [](const json& a) {
        std::vector<std::vector<double>> out;
        for (const auto& r : a) {
            std::vector<double> row;
            for (const auto& v : r) row.push_back(to_num(v));
            out.push_back(std::move(row));
        }
        return out;
    };
    TrajectoryLog log;
    log.layout = StateLayout(j.at("dims").get<std::vector<int>>());
    log.cliques = j.at("cliques").get<std::size_t>();
    log.dt = to_num(j.at("dt"));
    log.times = j.at("times").get<std::vector<double>>();
    for (const auto& x : j.at("states")) log.states.push_back(to_vec(x));
    for (const auto& r : j.at("inputs")) {
        std::vector<Eigen::VectorXd> row;
        for (const auto& u : r) row.push_back(to_vec(u));
        log.inputs.push_back(std::move(row));
    }
    log.barrier = rows_from(j.at("barrier"));
    log.residual = rows_from(j.at("residual"));
    log.share = rows_from(j.at("share"));
    log.disturbance = rows_from(j.at("disturbance"));
    for (const auto& e : j.at("events"))
        log.events.push_back({event_kind(e.at("kind").get<std::string>()), to_num(e.at("t")), e.at("step").get<std::size_t>(),
                              e.at("clique").get<int>(), e.at("agent").get<int>(), e.at("message").get<std::string>()});
    return log;
}

// ---- signal CSV ------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline double parse_cell(const std::string& s, std::size_t row) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size() || s.empty()) throw std::invalid_argument("row " + std::to_string(row) + ": bad number \"" + s + "\"");
    return v;
}

}  // namespace detail

struct SignalTable {
    StateLayout layout;
    SampledSignal signal;
};

/// Reads a CSV with a `t` column and state columns `x{i}_{c}` (1-based);
/// other columns are ignored. Agent dimensions come from the headers.
inline SignalTable read_signal_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("empty signal file");
    const auto header = detail::split_csv_line(line);
    int tcol = -1;
    std::map<std::pair<int, int>, int> xcols;  // (agent, component) -> column
    for (std::size_t c = 0; c < header.size(); ++c) {
        const auto& h = header[c];
        if (h == "t") {
            tcol = static_cast<int>(c);
            continue;
        }
        int agent = 0, comp = 0;
        char sep = 0;
        std::istringstream hs(h);
        if (h.size() > 1 && h[0] == 'x' && (hs.ignore(1), hs >> agent >> sep >> comp) && sep == '_' && hs.peek() == EOF &&
            agent >= 1 && comp >= 1)
            xcols[{agent, comp}] = static_cast<int>(c);
    }
    if (tcol < 0) throw std::invalid_argument("signal file has no 't' column");
    if (xcols.empty()) throw std::invalid_argument("signal file has no x{i}_{c} columns");
    std::vector<int> dims;
    std::vector<int> order;
    for (int a = 1;; ++a) {
        int d = 0;
        while (xcols.count({a, d + 1})) order.push_back(xcols[{a, ++d}]);
        if (d == 0) break;
        dims.push_back(d);
    }
    if (order.size() != xcols.size()) throw std::invalid_argument("state columns must be contiguous x1_1.. per agent");
    SignalTable tab{StateLayout(dims), {}};
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size()) throw std::invalid_argument("row " + std::to_string(row) + ": wrong column count");
        tab.signal.times.push_back(detail::parse_cell(cells[static_cast<std::size_t>(tcol)], row));
        Eigen::VectorXd x(static_cast<Eigen::Index>(order.size()));
        for (std::size_t k = 0; k < order.size(); ++k)
            x(static_cast<Eigen::Index>(k)) = detail::parse_cell(cells[static_cast<std::size_t>(order[k])], row);
        tab.signal.states.push_back(std::move(x));
    }
    tab.signal.validate();
    return tab;
}

}  // namespace stlcbf::io
