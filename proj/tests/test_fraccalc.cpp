#include <cmath>

#include <gtest/gtest.h>

#include "fdephi/fraccalc.hpp"

using namespace fdephi;

namespace {

double dist(const GridFunction& a, const GridFunction& b) { return (a - b).sup_norm(); }

GridFunction sample(const GridPtr& g, double (*f)(double)) { return GridFunction::sample(g, f); }

}  // namespace

TEST(FracIntegral, OneIsExactForLinearIntegrand) {
    const auto g = Grid::uniform(1.0, 33);
    const auto one = GridFunction::sample(g, [](double) { return 1.0; });
    const auto t = GridFunction::sample(g, [](double t) { return t; });
    EXPECT_LT(dist(frac_integral(one, 1.0, PhiSpec::identity()), t), 1e-14);
}

TEST(FracIntegral, PowerRuleIdentityPhi) {
    const auto g = Grid::uniform(1.0, 1025);
    const auto f = GridFunction::sample(g, [](double t) { return t * t; });
    const double lam = 0.6;
    const auto exact = GridFunction::sample(
        g, [&](double t) { return std::tgamma(3.0) / std::tgamma(3.0 + lam) * std::pow(t, 2.0 + lam); });
    EXPECT_LT(dist(frac_integral(f, lam, PhiSpec::identity()), exact), 1e-6);
}

TEST(FracIntegral, PowerRuleLogPhi) {
    const auto g = Grid::uniform(1.0, 1025);
    const PhiSpec phi("ln(t+1)");
    const double p = 1.0;
    const auto f = GridFunction::sample(g, [&](double t) { return std::pow(phi(t), p); });
    const auto exact = GridFunction::sample(
        g, [&](double t) { return std::tgamma(p + 1) / std::tgamma(p + 1.5) * std::pow(phi(t), p + 0.5); });
    EXPECT_LT(dist(frac_integral(f, 0.5, phi), exact), 1e-12);
}

TEST(FracIntegral, VanishesAtOrigin) {
    const auto g = Grid::uniform(1.0, 65);
    const auto f = sample(g, [](double t) { return std::cos(t) + 3.0; });
    for (ComplexOrder a : {ComplexOrder(0.3), ComplexOrder(1.7), ComplexOrder(0.5, 2.0)})
        EXPECT_EQ(frac_integral(f, a, PhiSpec("exp(t)"))[0], cplx(0.0));
}

TEST(FracIntegral, RejectsNonPositiveRealPart) {
    const auto g = Grid::uniform(1.0, 9);
    const auto f = sample(g, [](double t) { return t; });
    EXPECT_EQ(dist(frac_integral(f, 0.0, PhiSpec::identity()), f), 0.0);
}

TEST(FracIntegral, StoredAndOnTheFlyWeightsAgree) {
    const auto g = Grid::uniform(1.0, 129);
    const PhiSpec phi("t + t^2");
    const auto f = sample(g, [](double t) { return std::exp(t); });
    OperatorContext ctx(g, phi);
    EXPECT_LT(dist(ctx.integral(f, ComplexOrder(0.7, 0.3)), frac_integral(f, ComplexOrder(0.7, 0.3), phi)), 1e-14);
}

TEST(FracIntegral, SemigroupConverges) {
    double prev = 1.0;
    for (std::size_t N : {257u, 513u, 1025u}) {
        const auto g = Grid::uniform(1.0, N);
        OperatorContext ctx(g, PhiSpec::identity());
        const auto f = sample(g, [](double t) { return std::sin(t) + t * t; });
        const double e = dist(ctx.integral(ctx.integral(f, 0.4), 0.9), ctx.integral(f, 1.3));
        EXPECT_LT(e, prev);
        prev = e;
    }
    EXPECT_LT(prev, 1e-5);
}

TEST(Derivative, RlOfPower) {
    const auto g = Grid::uniform(1.0, 2049);
    OperatorContext ctx(g, PhiSpec::identity());
    const auto f = sample(g, [](double t) { return t * t; });
    const auto exact = phi_power_der(ctx, 0.5, 2.0);
    EXPECT_LT(dist(rl_derivative(ctx, f, 0.5), exact), 1e-5);
}

TEST(Derivative, CaputoOfConstantIsZero) {
    const auto g = Grid::uniform(1.0, 257);
    OperatorContext ctx(g, PhiSpec("ln(t+1)"));
    const auto f = sample(g, [](double) { return 3.0; });
    const std::vector<double> init = {3.0};
    for (ComplexOrder a : {ComplexOrder(0.4), ComplexOrder(1.0), ComplexOrder(0.7, 0.2)})
        EXPECT_LT(caputo_derivative(ctx, f, a, init).sup_norm(), 1e-13);
}

TEST(Derivative, CaputoWithZeroDataIsRiemannLiouville) {
    const auto g = Grid::uniform(1.0, 257);
    OperatorContext ctx(g, PhiSpec::identity());
    const auto f = sample(g, [](double t) { return t * t * t; });
    const std::vector<double> init = {0.0};
    EXPECT_EQ(dist(caputo_derivative(ctx, f, 0.6, init), rl_derivative(ctx, f, 0.6)), 0.0);
}

TEST(Derivative, CaputoRejectsWrongDataLength) {
    const auto g = Grid::uniform(1.0, 17);
    OperatorContext ctx(g, PhiSpec::identity());
    const auto f = sample(g, [](double t) { return t; });
    const std::vector<double> init = {0.0};
    EXPECT_THROW(caputo_derivative(ctx, f, 1.5, init), std::invalid_argument);
}

TEST(Derivative, CaputoSmoothOfSquare) {
    const auto g = Grid::uniform(1.0, 2049);
    OperatorContext ctx(g, PhiSpec::identity());
    const auto f = sample(g, [](double t) { return t * t; });
    const auto exact = GridFunction::sample(g, [](double t) { return 2.0 / std::tgamma(2.5) * std::pow(t, 1.5); });
    EXPECT_LT(dist(caputo_smooth(ctx, f, 0.5), exact), 1e-6);
    EXPECT_LT(caputo_smooth(ctx, sample(g, [](double) { return 1.0; }), 0.5).sup_norm(), 1e-14);
}

TEST(Derivative, CaputoSmoothMatchesCaputo) {
    // the two forms differ near t = 0, where the discrete derivative of a u^{1.4}-like
    // function converges slowly; away from it they agree to second order
    double prev = 1.0;
    for (std::size_t N : {513u, 2049u}) {
        const auto g = Grid::uniform(1.0, N);
        OperatorContext ctx(g, PhiSpec("ln(t+1)"));
        const auto f = sample(g, [](double t) { return std::exp(t) - 1.0; });
        const std::vector<double> init = {0.0};
        const auto d = caputo_smooth(ctx, f, 0.6) - caputo_derivative(ctx, f, 0.6, init);
        double interior = 0.0;
        for (std::size_t k = 0; k < N; ++k)
            if ((*g)[k] >= 0.1) interior = std::max(interior, std::abs(d[k]));
        EXPECT_LT(interior, 1e-5);
        EXPECT_LT(d.sup_norm(), prev);
        prev = d.sup_norm();
    }
}

TEST(Derivative, PhiDerivativeOfSquareIsExactish) {
    const auto g = Grid::uniform(1.0, 257);
    OperatorContext ctx(g, PhiSpec("ln(t+1)"));
    const auto u2 = ctx.shifted_power(2.0);
    const auto twice = ctx.shifted_power(1.0) * cplx(2.0);
    EXPECT_LT(dist(phi_derivative(u2, ctx.samples()), twice), 1e-4);
    EXPECT_LT(dist(phi_derivative(u2, ctx.samples(), 2), sample(g, [](double) { return 2.0; })), 1e-3);
}

TEST(PowerRules, Examples) {
    const auto g = Grid::uniform(1.0, 9);
    OperatorContext ctx(g, PhiSpec::identity());
    EXPECT_LT(dist(phi_power_int(ctx, 1.0, 0.0), sample(g, [](double t) { return t; })), 1e-15);
    const auto e = GridFunction::sample(g, [](double t) { return std::pow(t, 1.5) / std::tgamma(2.5); });
    EXPECT_LT(dist(phi_power_int(ctx, 0.5, 1.0), e), 1e-15);
    EXPECT_EQ(phi_power_der(ctx, 2.0, 1.0).sup_norm(), 0.0);
    EXPECT_EQ(phi_power_der(ctx, 3.0, 0.0).sup_norm(), 0.0);
}

TEST(Operators, Linearity) {
    const auto g = Grid::uniform(1.0, 129);
    OperatorContext ctx(g, PhiSpec("t + sin(t)/2"));
    const auto f = sample(g, [](double t) { return std::exp(-t); });
    const auto h = sample(g, [](double t) { return t * t; });
    const cplx a(2.0, -1.0), b = 0.5;
    const ComplexOrder al(0.6, 0.4);
    const auto lhs = ctx.integral(f * a + h * b, al);
    const auto rhs = ctx.integral(f, al) * a + ctx.integral(h, al) * b;
    EXPECT_LT(dist(lhs, rhs), 1e-14);
}
