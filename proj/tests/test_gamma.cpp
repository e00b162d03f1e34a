#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "fdephi/gamma.hpp"

using fdephi::cplx;

namespace {

double rel(cplx a, cplx b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST(Gamma, KnownValues) {
    EXPECT_DOUBLE_EQ(fdephi::gamma_complex(1.0).real(), 1.0);
    EXPECT_NEAR(fdephi::gamma_complex(0.5).real(), std::sqrt(std::numbers::pi), 1e-15);
    EXPECT_NEAR(fdephi::gamma_complex(-0.5).real(), -3.5449077018110321, 1e-14);
}

TEST(Gamma, ModulusAtOnePlusI) {
    const double lhs = std::norm(fdephi::gamma_complex({1.0, 1.0}));
    EXPECT_NEAR(lhs, std::numbers::pi / std::sinh(std::numbers::pi), 1e-14);
}

TEST(Gamma, ComplexReferenceValues) {
    EXPECT_LT(rel(fdephi::gamma_complex({0.3, 2.0}), {0.057465337569588033, -0.074984912582646138}), 1e-13);
    EXPECT_LT(rel(fdephi::gamma_complex({-2.5, 0.7}), {-0.15981871636293293, -0.15756654908151528}), 1e-13);
    EXPECT_LT(rel(fdephi::gamma_complex({30.0, -5.0}), {-1.8949185447519361e+30, 5.4813832361679509e+30}),
              1e-12);
}

TEST(Gamma, RecurrenceAndReflection) {
    for (cplx z : {cplx(0.2, 0.3), cplx(2.7, -1.1), cplx(-1.3, 0.4), cplx(5.0, 3.0)}) {
        EXPECT_LT(rel(fdephi::gamma_complex(z + 1.0), z * fdephi::gamma_complex(z)), 1e-13) << z;
        const cplx refl = std::numbers::pi / std::sin(std::numbers::pi * z);
        EXPECT_LT(rel(fdephi::gamma_complex(z) * fdephi::gamma_complex(1.0 - z), refl), 1e-12) << z;
    }
}

TEST(Gamma, PolesThrowAndReciprocalVanishes) {
    for (double n : {0.0, -1.0, -4.0}) {
        EXPECT_THROW(fdephi::gamma_complex(n), fdephi::PoleError);
        EXPECT_EQ(fdephi::rgamma_complex(n), cplx(0.0));
    }
    EXPECT_NO_THROW(fdephi::gamma_complex({-1.0, 1e-3}));
}

TEST(Gamma, LogGammaMatchesGammaAwayFromOverflow) {
    for (cplx z : {cplx(0.7, 0.2), cplx(12.0, -4.0), cplx(-3.3, 0.5)})
        EXPECT_LT(rel(std::exp(fdephi::lgamma_complex(z)), fdephi::gamma_complex(z)), 1e-12) << z;
    EXPECT_NEAR(fdephi::lgamma_complex(200.5).real(), std::lgamma(200.5), 1e-10);
}
