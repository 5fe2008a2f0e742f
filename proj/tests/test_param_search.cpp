#include "stlcbf/param_search.hpp"
#include "stlcbf/parser.hpp"
#include "stlcbf/scenario.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace stlcbf;

namespace {

std::vector<OperatorUnit> units_of(const std::string& text, std::vector<int> dims) {
    return normalize(parse(text, StateLayout(std::move(dims))));
}

// Small 2-D task used by the search tests; cheap enough to solve repeatedly.
const char* kToy = "F[0,2](x1[1] >= 1) & G[2,4](x1[2] <= 0.5)";

SearchConfig toy_config() {
    SearchConfig c;
    c.delta = 0.01;
    return c;
}

}  // namespace

TEST(ParamSearch, AlwaysWitnessSitsBetweenTermAndBound) {
    const auto units = units_of("G[0,5](x1 >= 0)", {1});
    const double D = 10.0, g0 = 0.5, eta = 20.0;
    const auto b = build_barrier(units, {make_gamma(g0, 2.0, 0.2, 0.0)}, eta, D);
    SearchConfig cfg;
    cfg.ascent_tolerance = 1e-10;
    const auto rep = feasibility_check(b, Eigen::VectorXd::Constant(1, 1.0), 0.01, cfg);
    ASSERT_EQ(rep.witnesses.size(), 1u);
    EXPECT_NEAR(rep.witnesses[0](0), (D + g0) / 2, 1e-6);
    EXPECT_NEAR(rep.witness_values[0], (D - g0) / 2 - std::log(2.0) / eta, 1e-9);
    EXPECT_TRUE(rep.feasible);
}

TEST(ParamSearch, PlacementRejectsUnreachableRobustness) {
    SearchConfig cfg;
    GammaChoice c{{4}, {4}};
    // r above the cap of a bounded predicate
    EXPECT_FALSE(place_gammas({{0.5, 1.0, 1.0, 1.0}}, c, 1.5, cfg).has_value());
    // t_star = 0 needs h(x0) > r
    EXPECT_FALSE(place_gammas({{0.2, 1.0, 1.0, 0.0}}, c, 0.3, cfg).has_value());
    EXPECT_TRUE(place_gammas({{0.5, 1.0, 1.0, 0.0}}, c, 0.3, cfg).has_value());
}

TEST(ParamSearch, PlacedGammasRespectTheirRanges) {
    SearchConfig cfg;
    const std::vector<UnitAnalysis> info{{-2.0, 3.0, 3.0, 2.0}, {1.0, 4.0, 4.0, 0.0}};
    for (int i0 = 0; i0 < 9; ++i0)
        for (int ii = 0; ii < 9; ++ii) {
            const double r = 0.4;
            auto p = place_gammas(info, {{i0, i0}, {ii, ii}}, r, cfg);
            ASSERT_TRUE(p.has_value());
            for (std::size_t l = 0; l < info.size(); ++l) {
                const auto& g = (*p)[l];
                EXPECT_LT(g.gamma0, info[l].h0);
                EXPECT_LT(g.gamma_inf, info[l].h_cap);
                EXPECT_GT(g.gamma_inf, std::max(r, g.gamma0));
                if (info[l].t_star == 0.0) {
                    EXPECT_GE(g.gamma0, r);
                }
                EXPECT_GE(gamma_eval(g, info[l].t_star), r - 1e-9);
            }
        }
}

TEST(ParamSearch, ZeroDeadlineTaskUsesBoundTermOnly) {
    const auto units = units_of("G[0,0](x1 >= 0)", {1});
    const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(1, 1.0);
    const auto res = maximize_r(units, x0);
    ASSERT_TRUE(res.feasible);
    EXPECT_TRUE(res.barrier.schedule().empty());
    EXPECT_DOUBLE_EQ(initial_barrier_value(res.barrier, x0), res.barrier.bound_value(x0));
    EXPECT_LE(res.r_star, 1.0);
    EXPECT_GE(res.r_star, 1.0 - 2e-3);
}

TEST(ParamSearch, ContradictoryTaskIsInfeasible) {
    const auto res = maximize_r(units_of("G[0,2](x1 >= 1) & G[0,2](x1 <= -1)", {1}), Eigen::VectorXd::Zero(1));
    EXPECT_FALSE(res.feasible);
    EXPECT_LE(res.diagnostics.r_upper, 0.0);
    EXPECT_FALSE(res.diagnostics.warnings.empty());
}

TEST(ParamSearch, UnsatisfiablePredicateIsSemanticError) {
    const OperatorUnit u{UnitKind::always, Predicate::quad_ball(Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1), -1.0),
                         Interval{0, 2}};
    EXPECT_THROW(maximize_r({u}, Eigen::VectorXd::Zero(1)), SemanticError);
}

TEST(ParamSearch, ToyTaskResultSatisfiesConstraints) {
    const auto units = units_of(kToy, {2});
    const Eigen::VectorXd x0 = Eigen::Vector2d(0, 0);
    const auto cfg = toy_config();
    const auto res = maximize_r(units, x0, cfg);
    ASSERT_TRUE(res.feasible);
    EXPECT_GT(res.r_star, 0.0);
    EXPECT_LE(res.r_star, res.diagnostics.r_upper);
    EXPECT_GE(initial_barrier_value(res.barrier, x0), cfg.delta);
    const auto rep = feasibility_check(res.barrier, x0, cfg.delta, cfg, &res.witnesses);
    EXPECT_TRUE(rep.feasible);
    for (double g : res.diagnostics.witness_gradient_norms) EXPECT_LT(g, 1e-6);
    for (double m : res.diagnostics.switch_margins) EXPECT_GE(m, 0.0);
    for (const auto& t : res.barrier.terms()) {
        EXPECT_LT(t.gamma.gamma0, t.unit.predicate.value(x0));
        EXPECT_LT(t.gamma.gamma0, t.gamma.gamma_inf);
        EXPECT_GT(t.gamma.gamma_inf, res.r_star);
        EXPECT_GE(gamma_eval(t.gamma, t.unit.critical_time()), res.r_star - 1e-9);
    }
    EXPECT_GT(res.kappa_scan, 0.0);
}

TEST(ParamSearch, BisectionBelowOptimumStaysFeasible) {
    const auto units = units_of(kToy, {2});
    const Eigen::VectorXd x0 = Eigen::Vector2d(0, 0);
    const auto cfg = toy_config();
    const auto res = maximize_r(units, x0, cfg);
    ASSERT_TRUE(res.feasible);
    detail::RobustnessSearch s(units, x0, cfg);
    for (double f : {0.25, 0.5, 0.9}) EXPECT_TRUE(s.search(f * res.r_star).report.feasible) << f;
}

TEST(ParamSearch, DeterministicUnderFixedSeed) {
    const auto units = units_of(kToy, {2});
    const Eigen::VectorXd x0 = Eigen::Vector2d(0, 0);
    const auto a = maximize_r(units, x0, toy_config());
    const auto b = maximize_r(units, x0, toy_config());
    EXPECT_EQ(a.r_star, b.r_star);
    EXPECT_EQ(a.choice, b.choice);
    ASSERT_EQ(a.barrier.terms().size(), b.barrier.terms().size());
    for (std::size_t l = 0; l < a.barrier.terms().size(); ++l) EXPECT_EQ(a.barrier.terms()[l].gamma, b.barrier.terms()[l].gamma);
    EXPECT_EQ(a.barrier.bound_radius(), b.barrier.bound_radius());
}

// Exhaustive oracle over the whole placement grid for a one-unit task.
TEST(ParamSearch, MatchesExhaustiveGridOracle) {
    const auto units = units_of("F[0,2](x1 >= 1)", {1});
    const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(1);
    SearchConfig cfg;
    cfg.delta = 0.01;
    const auto res = maximize_r(units, x0, cfg);
    ASSERT_TRUE(res.feasible);

    detail::RobustnessSearch s(units, x0, cfg);
    const double step = 0.01;
    double best = 0.0;
    for (double r = step; r < s.r_upper_bound(); r += step) {
        bool any = false;
        for (int i0 = 0; i0 < 9 && !any; ++i0)
            for (int ii = 0; ii < 9 && !any; ++ii) any = s.evaluate({{i0}, {ii}}, r, 20.0, nullptr).report.feasible;
        if (any) best = r;
    }
    EXPECT_GT(best, 0.0);
    EXPECT_GE(res.r_star, best - cfg.r_tolerance - 1e-12);
    EXPECT_LE(res.r_star, best + step + cfg.r_tolerance);
}

TEST(ParamSearch, GainBoundExample) {
    const auto k = kappa_from_bound(5.0, 0.1, 1.0, 2.0, 1e-3, 1e6);
    EXPECT_NEAR(k.log_neg_zeta, 9.5, 1e-12);
    EXPECT_NEAR(k.kappa, 11.0 * std::exp(9.5), 1e-6);
    EXPECT_NEAR(k.kappa, 146956.995, 1e-2);
    EXPECT_FALSE(k.clamped);
    const auto c = kappa_from_bound(5.0, 0.1, 1.0, 2.0, 1e-3, 1e5);
    EXPECT_TRUE(c.clamped);
    EXPECT_EQ(c.kappa, 1e5);
}

TEST(ParamSearch, GainBoundHugeExponentDoesNotOverflow) {
    const auto k = kappa_from_bound(20.0, 0.005, 3.0, 150.0, 1e-3, 1e6);
    EXPECT_TRUE(std::isfinite(k.log_neg_zeta));
    EXPECT_TRUE(k.clamped);
    EXPECT_EQ(k.kappa, 1e6);
}

TEST(ParamSearch, ZeroDecayGivesFloor) {
    const auto k = kappa_from_bound(5.0, 0.1, 0.0, 2.0, 1e-3, 1e6);
    EXPECT_TRUE(k.floored);
    EXPECT_EQ(k.kappa, 1e-3);
}

TEST(ParamSearch, ConfigValidation) {
    SearchConfig c;
    c.delta = 0.0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = {};
    c.gamma0_fractions = {0.0};
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = {};
    c.eta_grid = {};
    EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(ParamSearch, DemoSingleAgentCliqueIsFeasible) {
    const auto cfg = demo_scenario();
    const auto lay = cfg.layout();
    const auto res = maximize_r(clique_units(cfg, 1), lay.gather(cfg.x0(), cfg.cliques[1].members), cfg.search);
    ASSERT_TRUE(res.feasible);
    EXPECT_GT(res.r_star, 0.0);
    for (double w : res.diagnostics.witness_bound_weights) EXPECT_LT(w, 1e-6);
}
