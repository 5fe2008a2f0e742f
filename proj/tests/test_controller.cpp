#include "fixtures.hpp"
#include "oracles.hpp"

#include "stlcbf/controller.hpp"
#include "stlcbf/parser.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace stlcbf;
using fixture::gaussian;

TEST(Qp, ActiveConstraintProjects) {
    const auto u = solve_agent_qp(Eigen::Vector2d(1, 0), 2.0);
    EXPECT_TRUE(u.isApprox(Eigen::Vector2d(2, 0)));
}

TEST(Qp, InactiveConstraintGivesZero) {
    const auto u = solve_agent_qp(Eigen::Vector2d(3, 4), -1.0);
    EXPECT_EQ(u, Eigen::Vector2d::Zero());
}

TEST(Qp, ZeroRowWithPositiveRhsIsInfeasible) {
    EXPECT_THROW(solve_agent_qp(Eigen::Vector2d::Zero(), 0.5, 1.25, 3), InfeasibleQp);
    EXPECT_NO_THROW(solve_agent_qp(Eigen::Vector2d::Zero(), 0.0));
    try {
        solve_agent_qp(Eigen::Vector2d::Zero(), 0.5, 1.25, 3);
    } catch (const InfeasibleQp& e) {
        EXPECT_EQ(e.agent(), 3u);
    }
}

TEST(Qp, KktAndRandomCandidates) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        const auto a = gaussian(rng, 3);
        const double rhs = std::normal_distribution<double>(0, 2)(rng);
        const auto u = solve_agent_qp(a, rhs);
        EXPECT_GE(a.dot(u), rhs - 1e-12);
        if (rhs > 0) {
            EXPECT_NEAR(a.dot(u), rhs, 1e-9);
        }
        // u is a non-negative multiple of a
        EXPECT_NEAR((u - a * (u.dot(a) / a.squaredNorm())).norm(), 0.0, 1e-12);
        EXPECT_GE(u.dot(a), -1e-15);
        EXPECT_TRUE(oracle::beats_random_candidates(rng, a, rhs, u, 500));
    }
}

TEST(LoadShare, EqualBlocksSplitEvenly) {
    EXPECT_DOUBLE_EQ(load_share({2.0, 2.0}, 0), 0.5);
    EXPECT_DOUBLE_EQ(load_share({2.0, 2.0}, 1), 0.5);
}

TEST(LoadShare, AllZeroGivesOne) {
    EXPECT_EQ(load_share({0.0, 0.0, 0.0}, 1), 1.0);
    EXPECT_EQ(load_share({1e-14, 0.0}, 0), 1.0);
}

TEST(LoadShare, SharesSumToOne) {
    std::mt19937_64 rng(9);
    const StateLayout lay({2, 3, 1, 2});
    for (int trial = 0; trial < 1000; ++trial) {
        const auto g = gaussian(rng, lay.total());
        const auto n = block_norms(g, lay);
        double s = 0.0;
        for (std::size_t i = 0; i < n.size(); ++i) s += load_share(n, i);
        EXPECT_NEAR(s, 1.0, 1e-12);
    }
}

TEST(Controller, NoiseInflation) {
    EXPECT_DOUBLE_EQ(noise_inflation(6, 2), std::sqrt(12.0));
    EXPECT_DOUBLE_EQ(noise_inflation(2, 2), 2.0);
}

TEST(AgentModel, RejectsRankDeficientInputMap) {
    Eigen::MatrixXd g(2, 3);
    g << 1, 0, 0, 2, 0, 0;
    EXPECT_THROW(AgentModel(2, {}, InputMapSpec::constant(g)), std::invalid_argument);
    g << 1, 0, 1, 0, 1, 1;
    const AgentModel ok(2, {}, InputMapSpec::constant(g));
    EXPECT_TRUE((g * ok.right_inverse()).isApprox(Eigen::Matrix2d::Identity(), 1e-12));
    EXPECT_THROW(AgentModel(2, {}, InputMapSpec::constant(Eigen::MatrixXd::Identity(3, 3))), std::invalid_argument);
}

TEST(AgentModel, ScriptedDriftLookup) {
    const AgentModel m(1, DriftSpec::scripted({{1.0, Eigen::VectorXd::Constant(1, 2.0)}, {0.0, Eigen::VectorXd::Constant(1, 1.0)}}));
    EXPECT_EQ(m.drift(Eigen::VectorXd::Zero(1), -0.5)(0), 0.0);
    EXPECT_EQ(m.drift(Eigen::VectorXd::Zero(1), 0.5)(0), 1.0);
    EXPECT_EQ(m.drift(Eigen::VectorXd::Zero(1), 1.0)(0), 2.0);
}

namespace {

// Two 1-D agents, task only on agent 1: agent 2's gradient block is zero.
Clique first_agent_clique(double C) {
    const StateLayout lay({1, 1});
    auto units = normalize(parse("F[0,2](x1 >= 1)", lay));
    const auto b = build_barrier(units, {make_gamma(-2.0, 1.5, 0.3, 2.0)}, 20.0, 1000.0);
    Clique c;
    c.members = {0, 1};
    c.barrier = b;
    c.coupling_bound = C;
    c.kappa = 1.0;
    return c;
}

}  // namespace

TEST(Controller, ZeroGradientBlockIsVacuous) {
    const auto cl = first_agent_clique(0.5);
    const std::vector<AgentModel> agents{AgentModel(1), AgentModel(1)};
    const StateLayout lay({1, 1});
    const Eigen::Vector2d x(0.0, 3.0);
    const auto c2 = agent_constraint(cl, agents, lay, x, 0.5, 1);
    EXPECT_EQ(c2.grad_norm, 0.0);
    EXPECT_EQ(c2.share, 0.0);
    EXPECT_LE(c2.rhs, 0.0);
    EXPECT_EQ(solve_agent_qp(c2.a, c2.rhs), Eigen::VectorXd::Zero(1));
    const auto c1 = agent_constraint(cl, agents, lay, x, 0.5, 0);
    EXPECT_EQ(c1.share, 1.0);
}

TEST(Controller, SingleIntegratorConstraint) {
    const auto cl = first_agent_clique(0.5);
    const std::vector<AgentModel> agents{AgentModel(1), AgentModel(1)};
    const StateLayout lay({1, 1});
    const Eigen::Vector2d x(0.0, 3.0);
    const double t = 0.5;
    const auto ev = cl.barrier.gradients(x, t);
    const auto c = agent_constraint(cl, agents, lay, x, t, 0);
    // rhs = |g| n_hat C - (dbdt + kappa b), a = g
    EXPECT_NEAR(c.a(0), ev.grad_x(0), 1e-15);
    EXPECT_NEAR(c.rhs, std::abs(ev.grad_x(0)) * std::sqrt(2.0) * 0.5 - (ev.dbdt + ev.value), 1e-12);
}

TEST(Controller, RhsScalesWithCouplingBound) {
    const std::vector<AgentModel> agents{AgentModel(1), AgentModel(1)};
    const StateLayout lay({1, 1});
    const Eigen::Vector2d x(0.0, 3.0);
    const auto lo = agent_constraint(first_agent_clique(0.5), agents, lay, x, 0.5, 0);
    const auto hi = agent_constraint(first_agent_clique(1.5), agents, lay, x, 0.5, 0);
    EXPECT_NEAR(hi.rhs - lo.rhs, lo.grad_norm * std::sqrt(2.0), 1e-12);
}

namespace {

Team two_clique_team(std::mt19937_64& rng) {
    Team team;
    team.layout = StateLayout({2, 2, 2});
    team.agents = {AgentModel(2), AgentModel(2), AgentModel(2)};
    Clique a, b;
    a.members = {0, 1};
    a.barrier = fixture::random_barrier(rng, 4, 3, 20.0, fixture::Mix::mixed);
    a.coupling_bound = 0.3;
    a.kappa = 2.0;
    b.members = {2};
    b.barrier = fixture::random_barrier(rng, 2, 2, 20.0, fixture::Mix::mixed);
    b.coupling_bound = 0.2;
    b.kappa = 1.0;
    team.cliques = {a, b};
    return team;
}

}  // namespace

TEST(Controller, InputsDependOnlyOnOwnClique) {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 50; ++trial) {
        const Team team = two_clique_team(rng);
        const Eigen::VectorXd x = gaussian(rng, 6, 2.0);
        Eigen::VectorXd y = x;
        y.segment(4, 2) += gaussian(rng, 2, 5.0);  // perturb the other clique only
        TeamControl cx, cy;
        try {
            cx = team_control(team, x, 0.3);
            cy = team_control(team, y, 0.3);
        } catch (const InfeasibleQp&) {
            continue;
        }
        for (std::size_t i : {0u, 1u}) EXPECT_EQ(cx.input[i], cy.input[i]);
        EXPECT_EQ(cx.barrier[0], cy.barrier[0]);
    }
}

// Summing the agent constraints reproduces the clique-level condition
// grad^T v >= sum_i |g_i| n_hat C - (dbdt + kappa b).
TEST(Controller, AgentConstraintsAggregate) {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 200; ++trial) {
        const Team team = two_clique_team(rng);
        const auto& cl = team.cliques[0];
        const StateLayout local = team.layout.select(cl.members);
        const Eigen::VectorXd xbar = gaussian(rng, 4, 2.0);
        const double t = 0.3;
        const auto ce = evaluate_clique(cl.barrier, local, xbar, t);
        const double n_hat = noise_inflation(local.total(), team.layout.max_dim());
        double lhs = 0.0, rhs = 0.0, norm_sum = 0.0;
        for (std::size_t i = 0; i < 2; ++i) {
            const Eigen::VectorXd xi = xbar.segment(local.offset(i), 2);
            const auto c = agent_constraint(ce, local, team.agents[i], xi, t, i, cl.coupling_bound, cl.kappa, n_hat);
            Eigen::VectorXd v;
            try {
                v = solve_agent_qp(c.a, c.rhs);
            } catch (const InfeasibleQp&) {
                continue;
            }
            lhs += c.a.dot(v);
            rhs += c.rhs;
            norm_sum += c.grad_norm;
        }
        EXPECT_GE(lhs, rhs - 1e-9);
        if (norm_sum > kZeroThreshold) {
            EXPECT_NEAR(rhs, norm_sum * n_hat * cl.coupling_bound - (ce.dbdt + cl.kappa * ce.value), 1e-9 * (1 + std::abs(rhs)));
        }
    }
}

TEST(Controller, ExpiredCliqueGivesZeroInputAndNaN) {
    std::mt19937_64 rng(13);
    const Team team = two_clique_team(rng);
    const double late = std::max(team.cliques[0].barrier.horizon(), team.cliques[1].barrier.horizon());
    const auto ctl = team_control(team, Eigen::VectorXd::Zero(6), late);
    for (std::size_t k = 0; k < 2; ++k) EXPECT_TRUE(std::isnan(ctl.barrier[k]));
    for (const auto& u : ctl.input) EXPECT_EQ(u.norm(), 0.0);
}

TEST(Controller, SecondaryRepulsionAddsThroughRightInverse) {
    SecondaryController s{{0, 1}, 2.0, 0.01};
    const std::vector<Eigen::VectorXd> xs{Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 0)};
    const auto f = s.drift(0, [&](std::size_t j) { return xs[j]; });
    EXPECT_NEAR(f(0), -2.0 / 1.01, 1e-15);
    EXPECT_EQ(f(1), 0.0);
    EXPECT_EQ(s.drift(2, [&](std::size_t) { return Eigen::VectorXd(Eigen::Vector2d::Zero()); }).norm(), 0.0);
}

TEST(Team, ValidateRejectsOverlapsAndGaps) {
    std::mt19937_64 rng(14);
    Team team = two_clique_team(rng);
    EXPECT_NO_THROW(team.validate());
    auto bad = team;
    bad.cliques[1].members = {1};
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = team;
    bad.cliques.pop_back();
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = team;
    bad.secondary = SecondaryController{{0, 2}};
    bad.secondary_mode = SecondaryMode::unknown;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
}
