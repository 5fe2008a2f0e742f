#include "stlcbf/normalize.hpp"
#include "stlcbf/parser.hpp"

#include <gtest/gtest.h>

using namespace stlcbf;

namespace {

const StateLayout kFour({2, 2, 2, 2});
const StateLayout kScalar({1});

Eigen::VectorXd v(std::initializer_list<double> xs) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) out(i++) = x;
    return out;
}

}  // namespace

TEST(Parser, InfNormBoxExpandsToFourAffineLiterals) {
    const auto f = parse("G[5,10](norm_inf(x1 - [2.5,7]) <= 0.5)", kFour);
    ASSERT_EQ(f.kind(), NodeKind::always);
    EXPECT_EQ(f.interval(), (Interval{5, 10}));
    const auto& body = f.children().at(0);
    ASSERT_EQ(body.kind(), NodeKind::conjunction);
    ASSERT_EQ(body.children().size(), 4u);
    for (const auto& lit : body.children()) {
        ASSERT_EQ(lit.kind(), NodeKind::literal);
        EXPECT_TRUE(lit.predicate().is_affine());
    }
    // Inside the box every literal is positive; the center has margin 0.5.
    Eigen::VectorXd x = Eigen::VectorXd::Zero(8);
    x.head(2) = v({2.5, 7});
    for (const auto& lit : body.children()) EXPECT_DOUBLE_EQ(lit.predicate().value(x), 0.5);
    x.head(2) = v({3.2, 7});
    double worst = 1e9;
    for (const auto& lit : body.children()) worst = std::min(worst, lit.predicate().value(x));
    EXPECT_NEAR(worst, -0.2, 1e-12);
}

TEST(Parser, PointInterval) {
    const auto f = parse("F[0,0](x1 >= 0)", kScalar);
    EXPECT_EQ(f.kind(), NodeKind::eventually);
    EXPECT_EQ(f.interval(), (Interval{0, 0}));
}

TEST(Parser, RejectsReversedInterval) {
    try {
        parse("G[3,2](x1 >= 0)", kScalar);
        FAIL() << "expected SemanticError";
    } catch (const SemanticError& e) {
        EXPECT_NE(std::string(e.what()).find("interval a > b"), std::string::npos);
    }
}

TEST(Parser, RejectsTemporalNesting) {
    try {
        parse("G[0,1](F[0,1](x1 >= 0))", kScalar);
        FAIL() << "expected SemanticError";
    } catch (const SemanticError& e) {
        EXPECT_NE(std::string(e.what()).find("temporal nesting not in fragment"), std::string::npos);
    }
}

TEST(Parser, SyntaxErrorCarriesPosition) {
    try {
        parse("G[0,1](x1 >= )", kScalar);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.position(), 13u);
    }
    EXPECT_THROW(parse("G[0,1](x1 >= 0", kScalar), ParseError);
    EXPECT_THROW(parse("G[0,1](x5 >= 0)", kScalar), SemanticError);
    EXPECT_THROW(parse("G[0,1](x1[2] >= 0)", kScalar), SemanticError);
}

TEST(Parser, NegationFlipsAffineLiteral) {
    const auto f = parse("G[0,1](!(x1 >= 0.25))", kScalar);
    const auto& lit = f.children().at(0);
    ASSERT_EQ(lit.kind(), NodeKind::literal);
    EXPECT_DOUBLE_EQ(lit.predicate().value(v({1.0})), -0.75);
}

TEST(Parser, NegatedBallIsRejected) {
    EXPECT_THROW(parse("G[0,1](!ball2(x1, 1))", kScalar), SemanticError);
}

TEST(Parser, Ball2IsQuadraticBall) {
    const StateLayout two({2});
    const auto f = parse("F[0,2](ball2(x1 - [1,1], 0.5))", two);
    const auto& p = f.children().at(0).predicate();
    EXPECT_FALSE(p.is_affine());
    EXPECT_DOUBLE_EQ(p.value(v({1, 1})), 0.25);
    EXPECT_DOUBLE_EQ(p.value(v({1.5, 1})), 0.0);
    EXPECT_DOUBLE_EQ(p.sup(), 0.25);
}

TEST(Parser, DotAndComponentAtoms) {
    const StateLayout two({2, 2});
    const auto f = parse("G[0,1](dot([1,2], x2) + 1 >= 2 * x1[1])", two);
    const auto& p = f.children().at(0).predicate();
    // h = x2_1 + 2 x2_2 + 1 - 2 x1_1
    EXPECT_DOUBLE_EQ(p.value(v({1, 0, 3, 4})), 3 + 8 + 1 - 2);
    EXPECT_THROW(parse("G[0,1](dot(x1, x2) >= 0)", two), SemanticError);
}

TEST(Parser, UntilBindsTighterThanConjunction) {
    const auto f = parse("G[0,1](x1 >= 0) & (x1 >= 1) U[2,3] (x1 <= 5)", kScalar);
    ASSERT_EQ(f.kind(), NodeKind::conjunction);
    ASSERT_EQ(f.children().size(), 2u);
    EXPECT_EQ(f.children()[0].kind(), NodeKind::always);
    EXPECT_EQ(f.children()[1].kind(), NodeKind::until);
    EXPECT_DOUBLE_EQ(f.horizon(), 3.0);
}

TEST(Normalize, ConjunctionBodySplitsPerLiteral) {
    const auto units = normalize(parse("G[1,4]((x1 >= 0) & (x1 <= 3))", kScalar));
    ASSERT_EQ(units.size(), 2u);
    for (const auto& u : units) {
        EXPECT_EQ(u.kind, UnitKind::always);
        EXPECT_EQ(u.interval, (Interval{1, 4}));
        EXPECT_DOUBLE_EQ(u.deadline(), 4.0);
        EXPECT_DOUBLE_EQ(u.critical_time(), 1.0);
    }
}

TEST(Normalize, UntilBecomesAlwaysLeftAndEventuallyRightAtWindowEnd) {
    const auto units = normalize(parse("(x1 >= 1) U[10,20] (x1 >= 2)", kScalar));
    ASSERT_EQ(units.size(), 2u);
    EXPECT_EQ(units[0].kind, UnitKind::always);
    EXPECT_EQ(units[0].interval, (Interval{10, 20}));
    EXPECT_DOUBLE_EQ(units[0].predicate.value(v({1.5})), 0.5);
    EXPECT_EQ(units[1].kind, UnitKind::eventually);
    EXPECT_EQ(units[1].interval, (Interval{20, 20}));
    EXPECT_DOUBLE_EQ(units[1].predicate.value(v({1.5})), -0.5);
    EXPECT_DOUBLE_EQ(units[1].critical_time(), 20.0);
}

TEST(Normalize, SinglePredicateIsOneUnit) {
    const auto units = normalize(parse("G[0,5](x1 >= 0)", kScalar));
    ASSERT_EQ(units.size(), 1u);
    EXPECT_EQ(units[0].kind, UnitKind::always);
    EXPECT_DOUBLE_EQ(units[0].critical_time(), 0.0);
}

TEST(Normalize, TopLevelConjunctionConcatenatesAndDropsTrue) {
    const auto units = normalize(parse("G[0,5](x1 >= 0) & F[1,2](true) & F[3,4](x1 >= 1)", kScalar));
    ASSERT_EQ(units.size(), 2u);
    EXPECT_EQ(units[1].kind, UnitKind::eventually);
    EXPECT_DOUBLE_EQ(units[1].critical_time(), 4.0);
}

TEST(Normalize, RejectsBareStateFormula) { EXPECT_THROW(normalize(parse("x1 >= 0", kScalar)), SemanticError); }

TEST(Normalize, DemoFormulaUnitCounts) {
    const auto phi1 = normalize(parse(
        "G[5,10](norm_inf(x1 - [2.5,7]) <= 0.5) & ((norm_inf(x2 - x1 - [-1,1]) <= 0.5) & "
        "(norm_inf(x3 - x1 - [-1,-1]) <= 0.5)) U[10,20] (norm_inf(x1 - [8,6]) <= 0.5)",
        kFour));
    EXPECT_EQ(phi1.size(), 4u + 8u + 4u);
    const auto phi2 = normalize(parse(
        "F[5,10](norm_inf(x4 - [9,1]) <= 1) & G[0,10](x4[1] >= 8) & F[15,20](norm_inf(x4 - [1,1]) <= 1) & "
        "G[10,20](x4[2] <= 2)",
        kFour));
    EXPECT_EQ(phi2.size(), 4u + 1u + 4u + 1u);
    // The second task involves only agent 4.
    for (const auto& u : phi2) EXPECT_EQ(u.predicate.agent_support(kFour), (std::set<std::size_t>{3}));
}

TEST(Predicate, RestrictionRejectsForeignState) {
    const auto units = normalize(parse("G[0,1](x1 - x2 >= 0)", StateLayout({1, 1})));
    EXPECT_THROW((void)units[0].predicate.restricted({0}), SemanticError);
    const auto r = units[0].predicate.restricted({0, 1});
    EXPECT_DOUBLE_EQ(r.value(v({3, 1})), 2.0);
}

TEST(Predicate, QuadBallGradientMatchesFormula) {
    Eigen::MatrixXd a(2, 2);
    a << 1, 2, 0, 3;
    const auto p = Predicate::quad_ball(a, v({0.5, -1}), 4.0);
    const auto x = v({0.3, -0.7});
    const Eigen::VectorXd r = a * x + v({0.5, -1});
    EXPECT_NEAR(p.value(x), 4.0 - r.squaredNorm(), 1e-15);
    EXPECT_TRUE(p.gradient(x).isApprox(-2.0 * a.transpose() * r));
}
