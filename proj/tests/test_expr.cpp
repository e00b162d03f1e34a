#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "fdephi/expr.hpp"

namespace ex = fdephi::expr;
using ex::Expr;
using ex::Kind;

TEST(Parse, Precedence) {
    const auto e = ex::parse("t^2 + 1");
    ASSERT_EQ(e.kind(), Kind::Add);
    EXPECT_EQ(e.arg(0), Expr::binary(Kind::Pow, Expr::var(), Expr::number(2)));
    EXPECT_TRUE(e.arg(1).is_number(1.0));
}

TEST(Parse, PowerIsRightAssociativeAndBindsTighterThanNegation) {
    EXPECT_EQ(ex::parse("2^3^2"), ex::parse("2^(3^2)"));
    EXPECT_DOUBLE_EQ(ex::eval_real(ex::parse("-t^2"), 3.0), -9.0);
}

TEST(Parse, FunctionCall) {
    const auto e = ex::parse("ln(t)");
    ASSERT_EQ(e.kind(), Kind::Call);
    EXPECT_EQ(e.func(), ex::Func::Ln);
    EXPECT_EQ(e.arg(0), Expr::var());
}

TEST(Parse, SyntaxErrorOffset) {
    try {
        ex::parse("2*");
        FAIL() << "expected a syntax error";
    } catch (const ex::ParseError& e) {
        EXPECT_EQ(e.offset(), 2u);
        EXPECT_NE(std::string(e.what()).find("expected operand"), std::string::npos);
    }
}

TEST(Parse, UnknownIdentifier) {
    EXPECT_THROW(ex::parse("x + 1"), ex::UnknownIdentifier);
    EXPECT_THROW(ex::parse("tan(t)"), ex::UnknownIdentifier);
}

TEST(Eval, Basics) {
    EXPECT_DOUBLE_EQ(ex::eval_real(ex::parse("t^2+1"), 2.0), 5.0);
    EXPECT_NEAR(ex::eval_real(ex::parse("ln(t)"), std::numbers::e), 1.0, 1e-15);
    EXPECT_NEAR(ex::eval_real(ex::parse("pow(t, 0.5) * sqrt(t)"), 3.0), 3.0, 1e-14);
    EXPECT_NEAR(ex::eval_real(ex::parse("cos(pi) + exp(0)"), 0.0), 0.0, 1e-15);
}

TEST(Eval, DivisionByZero) { EXPECT_THROW(ex::eval_real(ex::parse("1/t"), 0.0), ex::EvalError); }

TEST(Eval, DomainErrors) {
    EXPECT_THROW(ex::eval_real(ex::parse("ln(t)"), 0.0), ex::EvalError);
    EXPECT_THROW(ex::eval_real(ex::parse("sqrt(t - 1)"), 0.0), ex::EvalError);
}

TEST(Eval, ComplexPathAgreesOnReals) {
    const auto e = ex::parse("exp(-t) * sin(3*t) + t^1.5");
    for (double t : {0.1, 0.5, 2.0}) EXPECT_NEAR(ex::eval(e, t).real(), ex::eval_real(e, t), 1e-14);
}

TEST(Differentiate, Rules) {
    EXPECT_TRUE(ex::differentiate(ex::parse("t")).is_number(1.0));
    const auto d = ex::differentiate(ex::parse("ln(t)"));
    EXPECT_DOUBLE_EQ(ex::eval_real(d, 2.0), 0.5);
    EXPECT_DOUBLE_EQ(ex::eval_real(ex::differentiate(ex::parse("t^3")), 2.0), 12.0);
}

TEST(Differentiate, MatchesCentralDifference) {
    const auto e = ex::parse("t^3");
    const double h = 1e-3, t = 2.0;
    const double fd = (ex::eval_real(e, t + h) - ex::eval_real(e, t - h)) / (2 * h);
    EXPECT_NEAR(ex::eval_real(ex::differentiate(e), t), fd, 1e-5);
}

TEST(Differentiate, ConstantsVanish) {
    EXPECT_TRUE(ex::differentiate(ex::parse("2*pi + e")).is_number(0.0));
}

TEST(Unparse, RoundTrip) {
    for (const char* s : {"t^2 + 1", "-(t - 1)^0.5", "exp(-t) / (1 + t)", "2^3^2", "(2^3)^2", "t - (t - 1)",
                          "pow(t, 2.5) * ln(t + 1)", "1e-07 * t"}) {
        const auto e = ex::parse(s);
        EXPECT_EQ(ex::parse(ex::unparse(e)), e) << s << " -> " << ex::unparse(e);
    }
}

TEST(Constant, Detection) {
    EXPECT_TRUE(ex::parse("0.3 + pi").is_constant());
    EXPECT_FALSE(ex::parse("1 + 0*t").is_constant());
}
