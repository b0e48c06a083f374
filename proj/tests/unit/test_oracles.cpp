// Checks of the reference oracles themselves against closed forms.

#include <cmath>
#include <gtest/gtest.h>
#include <numbers>

#include "brute_force.hpp"
#include "quadrature.hpp"

namespace bklab::oracle {
namespace {

TEST(Quadrature, Ma1AtOriginIsArcsine) {
    // E[(Phi(-c e) - 1/2)^2] = P(Z1 <= -c e, Z2 <= -c e) - 1/4 = asin(r) / (2 pi), r = c^2 / (1 + c^2).
    for (double c : {0.25, 0.5, 0.9}) {
        const double r = c * c / (1.0 + c * c);
        const auto g = ma1_gamma(c, 0.0, 0.0);
        EXPECT_NEAR(g.gamma, std::asin(r) / (2.0 * std::numbers::pi), 1e-12) << c;
    }
    EXPECT_NEAR(ma1_gamma(0.5, 0.0, 0.0).gamma, 0.032047, 1e-6);
}

TEST(Quadrature, DegenerateAndSymmetric) {
    EXPECT_NEAR(ma1_gamma(0.0, 0.7, 0.7).gamma, 0.0, 1e-15);
    EXPECT_NEAR(ma1_gamma(0.5, -1.0, 1.0).gamma, ma1_gamma(0.5, 1.0, -1.0).gamma, 1e-14);
    EXPECT_NEAR(ma1_gamma(0.5, -1.0, -1.0).gamma, ma1_gamma(0.5, 1.0, 1.0).gamma, 1e-14);
    EXPECT_NEAR(ma1_gamma(0.5, 1.0, 1.0).cross, 0.0, 1e-13);
}

TEST(Quadrature, PowerLawVariance) {
    double s = 1.0;
    for (int k = 1; k < 2000000; ++k) {
        const double c = std::pow(1.0 + k, -4.0) * std::pow(std::log(std::numbers::e + k), -1.5);
        s += c * c;
    }
    EXPECT_NEAR(power_law_variance(4.0), s, 1e-15);
}

TEST(BruteForce, HandValues) {
    const Marginal u{[](double x) { return x; }, [](double) { return 1.0; }, [](double y) { return y; }};
    const std::vector<double> v{0.25, 0.75};
    EXPECT_NEAR(residual(v, u, 0.5), std::sqrt(2.0) * 0.25, 1e-15);
    EXPECT_NEAR(sup_abs_beta(v, u), std::sqrt(2.0) * 0.25, 1e-15);
    // g(t) = E_2(t) - t: jumps of 1/2 at 0.25 and 0.75; largest swing within 0.1 is a jump plus drift.
    EXPECT_NEAR(increment_modulus(v, 0.1), 0.5, 1e-12);
    EXPECT_NEAR(increment_modulus(v, 1.0), 0.5, 1e-12);
}

}  // namespace
}  // namespace bklab::oracle
