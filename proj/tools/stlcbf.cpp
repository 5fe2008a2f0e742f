// stlcbf: construct barriers, simulate, verify and monitor STL tasks.
//
// Exit codes: 0 pass, 1 infeasible or verification failure, 2 usage or
// input error, 3 internal error.

#include "stlcbf/io.hpp"
#include "stlcbf/parser.hpp"
#include "stlcbf/robustness.hpp"
#include "stlcbf/scenario.hpp"
#include "stlcbf/sim.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using stlcbf::io::json;

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;
constexpr int kInternal = 3;

/// Input problems (bad files, configs, formulas) map to exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

stlcbf::ScenarioConfig load_config(const std::string& path) {
    try {
        return stlcbf::scenario_from_json(stlcbf::io::read_json_file(path));
    } catch (const std::exception& e) {
        throw UsageError(path + ": " + e.what());
    }
}

double elapsed(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string g6(double v) {
    std::ostringstream os;
    os << std::setprecision(6) << v;
    return os.str();
}

void print_construction(const stlcbf::Construction& c) {
    for (std::size_t k = 0; k < c.cliques.size(); ++k) {
        const auto& r = c.cliques[k];
        std::cout << "clique " << k + 1 << ": ";
        if (r.feasible)
            std::cout << "r* = " << g6(r.r_star) << ", kappa_scan = " << g6(r.kappa_scan)
                      << ", kappa_bound = " << g6(r.kappa_bound.kappa) << (r.kappa_bound.clamped ? " (clamped)" : "")
                      << ", eta = " << g6(r.barrier.eta()) << ", D = " << g6(r.barrier.bound_radius());
        else
            std::cout << "infeasible (best margin " << g6(r.diagnostics.initial_margin) << ")";
        std::cout << '\n';
        for (const auto& w : r.diagnostics.warnings) std::cout << "  warning: " << w << '\n';
    }
}

std::vector<stlcbf::Clique> verify_cliques(const stlcbf::ScenarioConfig& cfg, const std::vector<double>& r_star) {
    const auto lay = cfg.layout();
    std::vector<stlcbf::Clique> out;
    for (std::size_t k = 0; k < cfg.cliques.size(); ++k) {
        stlcbf::Clique c;
        c.members = cfg.cliques[k].members;
        c.formula = stlcbf::parse(cfg.cliques[k].formula_text, lay);
        c.r_star = k < r_star.size() ? r_star[k] : 0.0;
        out.push_back(std::move(c));
    }
    return out;
}

json report_json(const stlcbf::VerifyReport& rep) {
    json cl = json::array();
    for (const auto& v : rep.cliques)
        cl.push_back({{"min_barrier", stlcbf::io::num(v.min_barrier)},
                      {"robustness", stlcbf::io::num(v.robustness)},
                      {"r_star", v.r_star},
                      {"max_speed", v.max_speed},
                      {"tol_robustness", v.tol_robustness},
                      {"pass", v.pass}});
    return {{"pass", rep.pass}, {"team_robustness", stlcbf::io::num(rep.team_robustness)}, {"cliques", cl}};
}

void print_verdicts(const stlcbf::VerifyReport& rep) {
    for (std::size_t k = 0; k < rep.cliques.size(); ++k) {
        const auto& v = rep.cliques[k];
        std::cout << "clique " << k + 1 << ": min b = " << g6(v.min_barrier) << ", rho = " << g6(v.robustness)
                  << ", r* = " << g6(v.r_star) << ", tol = " << g6(v.tol_robustness) << (v.pass ? "  PASS" : "  FAIL")
                  << '\n';
    }
    std::cout << "team rho = " << g6(rep.team_robustness) << '\n';
}

struct SimOutcome {
    stlcbf::RunResult run;
    stlcbf::VerifyReport report;
    double seconds = 0.0;
};

SimOutcome simulate_seed(const stlcbf::ScenarioConfig& cfg, const stlcbf::Construction& con, std::uint64_t seed,
                         const fs::path& out_dir, const std::string& stem) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto world = stlcbf::make_world(cfg, con, seed);
    SimOutcome o;
    o.run = stlcbf::run(world, cfg.sim);
    o.seconds = elapsed(t0);
    o.report = stlcbf::verify(o.run.log, world.team.cliques);
    std::vector<double> r_star;
    for (const auto& c : con.cliques) r_star.push_back(c.r_star);
    fs::create_directories(out_dir);
    {
        std::ofstream csv(out_dir / (stem + ".csv"));
        if (!csv) throw std::runtime_error("cannot write " + (out_dir / (stem + ".csv")).string());
        stlcbf::io::write_log_csv(csv, o.run.log);
    }
    json extra = {{"r_star", r_star}, {"seed", seed}, {"config_hash", cfg.hash()}, {"completed", o.run.completed},
                  {"error", o.run.error}};
    stlcbf::io::write_text_file((out_dir / (stem + ".json")).string(), stlcbf::io::log_to_json(o.run.log, extra).dump() + "\n");
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Barrier-based construction, simulation and monitoring of STL tasks"};
    app.require_subcommand(1);

    std::string config_path, barrier_path = "barrier.json", log_path, out_dir = "out", formula, signal_path, report_path;
    std::optional<std::uint64_t> seed;
    std::optional<double> dt;
    double tol_barrier = 1e-3, at = 0.0;
    bool strict_until = false;
    int demo_seeds = 0;

    auto* construct = app.add_subcommand("construct", "solve the offline parameter search for every clique");
    construct->add_option("-c,--config", config_path, "scenario file")->required();
    construct->add_option("-o,--out", barrier_path, "barrier document to write");

    auto* simulate = app.add_subcommand("simulate", "run the closed loop with a constructed barrier");
    simulate->add_option("-c,--config", config_path, "scenario file")->required();
    simulate->add_option("-b,--barrier", barrier_path, "barrier document");
    simulate->add_option("--seed", seed, "noise seed (default: first of sim.seeds)");
    simulate->add_option("--dt", dt, "step size override");
    simulate->add_option("-o,--out-dir", out_dir, "output directory for log.csv / log.json");

    auto* verify = app.add_subcommand("verify", "check a logged run against the clique tasks");
    verify->add_option("-l,--log", log_path, "log document (log.json)")->required();
    verify->add_option("-c,--config", config_path, "scenario file")->required();
    verify->add_option("--tol-barrier", tol_barrier, "allowed barrier undershoot");
    verify->add_option("--report", report_path, "write the JSON report here");
    verify->add_flag("--strict-until", strict_until, "left operand of U must hold from the evaluation time");

    auto* monitor = app.add_subcommand("monitor", "robustness of a formula on a sampled signal");
    monitor->add_option("-f,--formula", formula, "formula text")->required();
    monitor->add_option("-s,--signal", signal_path, "CSV with t and x{i}_{c} columns")->required();
    monitor->add_option("--at", at, "evaluation time");
    monitor->add_flag("--strict-until", strict_until, "left operand of U must hold from the evaluation time");

    auto* demo = app.add_subcommand("demo", "run the bundled four-agent scenario end to end");
    demo->add_option("-o,--out-dir", out_dir, "output directory");
    demo->add_option("--seeds", demo_seeds, "number of noise seeds (default: all in the config)");
    demo->add_option("--dt", dt, "step size override");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kPass : kUsage;
    }

    const auto until = strict_until ? stlcbf::UntilSemantics::evaluation_time : stlcbf::UntilSemantics::window_start;
    try {
        if (*construct) {
            const auto cfg = load_config(config_path);
            const auto t0 = std::chrono::steady_clock::now();
            const auto con = stlcbf::construct(cfg);
            stlcbf::io::write_text_file(barrier_path, stlcbf::to_json(con, cfg).dump(2) + "\n");
            print_construction(con);
            std::cout << "construction time " << g6(elapsed(t0)) << " s, written to " << barrier_path << '\n';
            return con.feasible() ? kPass : kFail;
        }
        if (*simulate) {
            auto cfg = load_config(config_path);
            if (dt) cfg.sim.dt = *dt;
            stlcbf::Construction con;
            try {
                con = stlcbf::construction_from_json(stlcbf::io::read_json_file(barrier_path));
            } catch (const std::exception& e) {
                throw UsageError(barrier_path + ": " + e.what());
            }
            if (con.config_hash != cfg.hash()) throw UsageError("barrier document does not match this config");
            if (!con.feasible()) {
                std::cerr << "construction is infeasible; nothing to simulate\n";
                return kFail;
            }
            const auto o = simulate_seed(cfg, con, seed.value_or(cfg.seeds.front()), out_dir, "log");
            if (!o.run.completed)
                std::cout << "aborted at step " << *o.run.failed_step << ": " << o.run.error << '\n';
            print_verdicts(o.report);
            std::cout << "runtime " << g6(o.seconds) << " s, log in " << out_dir << '\n';
            return o.run.completed ? kPass : kFail;
        }
        if (*verify) {
            const auto cfg = load_config(config_path);
            json doc;
            stlcbf::TrajectoryLog log;
            try {
                doc = stlcbf::io::read_json_file(log_path);
                log = stlcbf::io::log_from_json(doc);
            } catch (const std::exception& e) {
                throw UsageError(log_path + ": " + e.what());
            }
            if (doc.value("config_hash", cfg.hash()) != cfg.hash()) throw UsageError("log was produced from a different config");
            const auto r_star = doc.value("r_star", std::vector<double>{});
            const auto rep = stlcbf::verify(log, verify_cliques(cfg, r_star), tol_barrier, until);
            const bool pass = rep.pass && doc.value("completed", true);
            auto j = report_json(rep);
            j["pass"] = pass;
            if (!report_path.empty()) stlcbf::io::write_text_file(report_path, j.dump(2) + "\n");
            std::cout << j.dump() << '\n';
            return pass ? kPass : kFail;
        }
        if (*monitor) {
            std::ifstream in(signal_path);
            if (!in) throw UsageError("cannot open " + signal_path);
            stlcbf::io::SignalTable tab;
            stlcbf::Formula f = stlcbf::Formula::top();
            try {
                tab = stlcbf::io::read_signal_csv(in);
                f = stlcbf::parse(formula, tab.layout);
            } catch (const std::exception& e) {
                throw UsageError(e.what());
            }
            std::cout << std::setprecision(17) << stlcbf::robustness(f, tab.signal, at, until) << '\n';
            return kPass;
        }
        if (*demo) {
            auto cfg = stlcbf::demo_scenario();
            if (dt) cfg.sim.dt = *dt;
            const fs::path dir(out_dir);
            fs::create_directories(dir);
            stlcbf::io::write_text_file((dir / "demo.json").string(), std::string(stlcbf::demo_scenario_text()) + "\n");
            const auto t0 = std::chrono::steady_clock::now();
            const auto con = stlcbf::construct(cfg);
            stlcbf::io::write_text_file((dir / "barrier.json").string(), stlcbf::to_json(con, cfg).dump(2) + "\n");
            print_construction(con);
            std::cout << "construction time " << g6(elapsed(t0)) << " s\n";
            if (!con.feasible()) return kFail;
            const std::size_t n = demo_seeds > 0 ? std::min<std::size_t>(static_cast<std::size_t>(demo_seeds), cfg.seeds.size())
                                                 : cfg.seeds.size();
            bool all = true;
            for (std::size_t s = 0; s < n; ++s) {
                const auto o = simulate_seed(cfg, con, cfg.seeds[s], dir, "log_seed" + std::to_string(cfg.seeds[s]));
                const bool ok = o.run.completed && o.report.pass;
                all = all && ok;
                std::cout << "seed " << cfg.seeds[s] << (o.run.completed ? "" : " (aborted: " + o.run.error + ")");
                for (std::size_t k = 0; k < o.report.cliques.size(); ++k)
                    std::cout << "  b" << k + 1 << "_min=" << g6(o.report.cliques[k].min_barrier) << " rho" << k + 1 << "="
                              << g6(o.report.cliques[k].robustness);
                std::cout << "  rho=" << g6(o.report.team_robustness) << (ok ? "  PASS" : "  FAIL") << '\n';
            }
            return all ? kPass : kFail;
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const stlcbf::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const stlcbf::SemanticError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const stlcbf::WindowError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kInternal;
    }
    return kUsage;
}
