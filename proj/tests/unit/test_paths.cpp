#include <algorithm>
#include <cmath>
#include <gtest/gtest.h>
#include <sstream>

#include "bklab/empirical.hpp"
#include "bklab/errors.hpp"
#include "bklab/paths.hpp"
#include "bklab/rng.hpp"

namespace bklab {
namespace {

LinearProcessModel iid_uniform() {
    return LinearProcessModel::create(InnovationModel::uniform(), CoefficientSequence::finite({1.0}), 0.45);
}

LinearProcessModel power_gaussian() {
    return LinearProcessModel::create(InnovationModel::normal(), CoefficientSequence::power_law(3.0), 0.45);
}

TEST(Simulate, IidPathIsInnovations) {
    const auto p = simulate_path(iid_uniform(), 3, 5);
    ASSERT_EQ(p.x.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(p.pred[i], 0.0);
        EXPECT_EQ(p.x[i], p.eps(static_cast<std::ptrdiff_t>(i) + 1));
        EXPECT_GT(p.x[i], 0.0);
        EXPECT_LT(p.x[i], 1.0);
    }
}

TEST(Simulate, Ma1Identity) {
    const auto m = LinearProcessModel::create(InnovationModel::normal(), CoefficientSequence::finite({1.0, 0.5}), 0.3);
    const auto p = simulate_path(m, 2, 9);
    EXPECT_EQ(p.horizon, 1u);
    EXPECT_DOUBLE_EQ(p.pred[1], 0.5 * p.eps(1));
    EXPECT_DOUBLE_EQ(p.x[1], p.eps(2) + 0.5 * p.eps(1));
    EXPECT_DOUBLE_EQ(p.pred[0], 0.5 * p.eps(0));
}

TEST(Simulate, AdditivityAndDeterminism) {
    const auto m = power_gaussian();
    const auto a = simulate_path(m, 2000, 77);
    const auto b = simulate_path(m, 2000, 77);
    const auto c = simulate_path(m, 2000, 78);
    EXPECT_EQ(a.x, b.x);
    EXPECT_EQ(a.pred, b.pred);
    EXPECT_NE(a.x, c.x);
    for (std::size_t i = 0; i < a.n; ++i) EXPECT_EQ(a.x[i], a.eps(static_cast<std::ptrdiff_t>(i) + 1) + a.pred[i]);
}

TEST(Simulate, PowerLawVariance) {
    const auto m = power_gaussian();
    const std::size_t n = 10000;
    const double sigma2 = m.coefficients().sum_sq();
    int pass = 0;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto p = simulate_path(m, n, seed);
        double mean = 0.0;
        for (double v : p.x) mean += v;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (double v : p.x) var += (v - mean) * (v - mean);
        var /= static_cast<double>(n - 1);
        // The MA dependence inflates the standard error over the i.i.d. value
        // sigma^2 sqrt(2/n) by sqrt(1 + 2 sum rho_k^2), which is below 1.1 here.
        const double se = 1.1 * sigma2 * std::sqrt(2.0 / static_cast<double>(n));
        if (std::fabs(var - sigma2) <= 3.0 * se) ++pass;
    }
    EXPECT_EQ(pass, 3);
}

TEST(Simulate, DirectAndTransformAgree) {
    UniformStream s(3);
    for (std::size_t k : {1u, 7u, 64u, 300u}) {
        const std::size_t n = 1500;
        std::vector<double> c(k);
        for (auto& v : c) v = s.next() - 0.5;
        std::vector<double> eps(n + k);
        for (auto& v : eps) v = s.next() - 0.5;
        std::vector<double> direct(n);
        std::vector<double> fft(n);
        convolve_predictors(c, eps, direct, ConvolutionMethod::Direct);
        convolve_predictors(c, eps, fft, ConvolutionMethod::Transform);
        double scale = 0.0;
        for (double v : direct) scale = std::max(scale, std::fabs(v));
        for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(direct[i], fft[i], 1e-9 * scale) << k << " " << i;
    }
}

TEST(Simulate, PathMethodsAgree) {
    const auto m = power_gaussian();
    const auto a = simulate_path(m, 4000, 5, {std::nullopt, ConvolutionMethod::Direct});
    const auto b = simulate_path(m, 4000, 5, {std::nullopt, ConvolutionMethod::Transform});
    for (std::size_t i = 0; i < a.n; ++i) EXPECT_NEAR(a.x[i], b.x[i], 1e-9 * std::max(1.0, std::fabs(a.x[i])));
}

TEST(Simulate, MonotoneTruncation) {
    const auto m = LinearProcessModel::create(InnovationModel::logistic(), CoefficientSequence::power_law(3.0), 0.45);
    const auto loose = simulate_path(m, 10, 1, {1e-3, ConvolutionMethod::Auto});
    const auto tight = simulate_path(m, 10, 1, {1e-6, ConvolutionMethod::Auto});
    EXPECT_GE(tight.horizon, loose.horizon);
    EXPECT_LE(tight.eps_tail_var, loose.eps_tail_var);
    EXPECT_GT(loose.eps_tail_var, 0.0);
}

TEST(Simulate, GaussianCompensated) {
    const auto p = simulate_path(power_gaussian(), 10, 1);
    EXPECT_EQ(p.eps_tail_var, 0.0);
    EXPECT_NE(p.compensator, nullptr);
}

TEST(Pit, IidUniformIsIdentity) {
    const auto m = iid_uniform();
    const auto o = build_marginal_oracle(m, 1000, 0);
    const auto p = simulate_path(m, 100, 2);
    const auto u = pit_transform(p, o);
    for (std::size_t i = 0; i < p.n; ++i) EXPECT_EQ(u[i], p.x[i]);
}

TEST(Pit, GaussianSymmetryAndRange) {
    const auto m = power_gaussian();
    const auto o = build_marginal_oracle(m);
    SamplePath zero;
    zero.n = 3;
    zero.x = {0.0, -80.0, 80.0};
    zero.pred = {0.0, 0.0, 0.0};
    const auto u = pit_transform(zero, o);
    EXPECT_EQ(u[0], 0.5);
    EXPECT_GT(u[1], 0.0);
    EXPECT_LT(u[2], 1.0);
}

TEST(Pit, MeanAndUniformity) {
    const auto m = power_gaussian();
    const auto o = build_marginal_oracle(m);
    const std::size_t n = std::size_t{1} << 14;
    const double nn = static_cast<double>(n);
    int mean_ok = 0;
    int ks_ok = 0;
    for (std::uint64_t seed : {11u, 12u, 13u}) {
        const auto u = pit_transform(simulate_path(m, n, seed), o);
        double mean = 0.0;
        for (double v : u) mean += v;
        mean /= nn;
        if (std::fabs(mean - 0.5) <= 4.0 / std::sqrt(12.0 * nn)) ++mean_ok;
        const auto s = summarize(u);
        const double ks = sup_abs_alpha(s) / std::sqrt(nn);
        if (ks <= 3.0 / std::sqrt(nn) * std::sqrt(2.0 * std::log(std::log(nn)))) ++ks_ok;
    }
    EXPECT_GE(mean_ok, 2);
    EXPECT_GE(ks_ok, 2);
}

TEST(Truncate, BoundaryAndFiniteMemory) {
    const auto m = LinearProcessModel::create(InnovationModel::normal(), CoefficientSequence::finite({1.0, 0.5}), 0.3);
    const auto p = simulate_path(m, 500, 4);
    const auto t = truncate_path(p, m, 0.3);
    EXPECT_EQ(t.x[0], p.eps(1));
    EXPECT_EQ(t.pred[0], 0.0);
    for (std::size_t i = 10; i < p.n; ++i) {
        EXPECT_EQ(t.x[i], p.x[i]) << i;
        EXPECT_EQ(t.pred[i], p.pred[i]) << i;
    }
    ASSERT_TRUE(t.truncation_rho.has_value());
    EXPECT_EQ(*t.truncation_rho, 0.3);
}

TEST(Truncate, LagCount) {
    EXPECT_EQ(truncated_lag_count(1, 0.45), 1u);
    EXPECT_EQ(truncated_lag_count(2, 0.45), 2u);
    EXPECT_EQ(truncated_lag_count(100, 0.5), 10u);
    EXPECT_EQ(truncated_lag_count(101, 0.5), 11u);
}

TEST(Truncate, PowerLawGapShrinks) {
    const auto m = power_gaussian();
    const std::size_t n = 10000;
    double late = 0.0;
    double early = 0.0;
    std::size_t late_count = 0;
    std::size_t early_count = 0;
    for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
        const auto p = simulate_path(m, n, seed);
        const auto t = truncate_path(p, m, 0.45);
        for (std::size_t i = 0; i < n; ++i) {
            const double gap = std::fabs(p.x[i] - t.x[i]);
            if (i + 1 >= 5000) {
                late += gap;
                ++late_count;
            } else if (i + 1 >= 50 && i + 1 < 500) {
                early += gap;
                ++early_count;
            }
        }
    }
    late /= static_cast<double>(late_count);
    early /= static_cast<double>(early_count);
    EXPECT_LT(late, early);
    const double i = 5000.0;
    EXPECT_LT(late, 10.0 / i * std::pow(std::log(i), -1.5));
}

TEST(Truncate, NeedsInnovations) {
    const auto m = power_gaussian();
    auto p = simulate_path(m, 10, 1);
    p.innovations.reset();
    EXPECT_THROW(truncate_path(p, m, 0.45), StateError);
}

TEST(Dump, Format) {
    const auto p = simulate_path(iid_uniform(), 3, 5);
    std::ostringstream out;
    write_path_dump(out, p);
    std::istringstream in(out.str());
    std::string line;
    std::size_t rows = 0;
    bool saw_seed = false;
    while (std::getline(in, line)) {
        if (line.rfind("# seed:", 0) == 0) saw_seed = true;
        if (!line.empty() && line[0] != '#' && line.rfind("i,", 0) != 0) ++rows;
    }
    EXPECT_TRUE(saw_seed);
    EXPECT_EQ(rows, 3u);
}

}  // namespace
}  // namespace bklab
