#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "bklab/empirical.hpp"
#include "bklab/oracle.hpp"

namespace bklab {

/// b_n = n^-1/4 (log n)^1/2 (log log n)^1/4; DomainError for n < 16.
double rate_b(double n);
/// lambda_n = n^-1/2 (2 log log n)^1/2; DomainError for n < 16.
double rate_lambda(double n);
/// n^-1/4 (log log n)^3/4; DomainError for n < 16.
double rate_kiefer_pointwise(double n);

/// max(2 gamma, 3 gamma - 2); DomainError for gamma < 1.
double csr_nu_min(double gamma);

/// Smallest density f(Q(y)) accepted on a bounded working interval.
inline constexpr double kDensityFloor = 1e-12;

/// R_n(y) = f(Q(y)) q_n(y) - alpha_n(y). Throws ConditionError when f(Q(y)) = 0.
double residual_pointwise(const EmpiricalSummary& s, const EmpiricalSummary& pit, const MarginalOracle& oracle,
                          double y);

struct ResidualSeries {
    std::vector<double> y_grid;
    std::vector<double> values;
    std::vector<double> weights;
    double sup_abs = 0.0;
    /// max h(y) |R_n(y)| with h = (y(1 - y))^nu; NaN when no nu was given.
    double weighted_sup = 0.0;
    std::optional<double> nu;
    std::pair<double, double> interval{0.0, 1.0};
    std::size_t n = 0;
    std::uint64_t seed = 0;
    std::size_t refine = 0;
    std::size_t grid_size = 0;
    /// sup_abs recomputed with 2 * refine uniform points, when requested.
    std::optional<double> sup_abs_doubled;
};

struct ResidualOptions {
    /// Keep y_grid / values / weights; sup statistics are always filled.
    bool keep_series = true;
    /// Also evaluate the sup with the uniform refinement doubled.
    bool refinement_check = false;
};

/// Sup of |R_n| over jump_grid(pit, a, b, refine). With nu set the weighted
/// sup is computed on the same grid. Throws ConditionError when the density
/// falls below kDensityFloor on the grid.
ResidualSeries residual_sup(const EmpiricalSummary& s, const EmpiricalSummary& pit, const MarginalOracle& oracle,
                            double a, double b, std::size_t refine, std::optional<double> nu = std::nullopt,
                            const ResidualOptions& options = {});

/// Weighted sup over (1/(n+1), n/(n+1)). Throws ConditionError unless
/// nu > csr_nu_min(gamma), where gamma = min(gamma1, gamma2).
ResidualSeries weighted_residual_sup(const EmpiricalSummary& s, const EmpiricalSummary& pit,
                                     const MarginalOracle& oracle, double nu, double gamma, std::size_t refine,
                                     const ResidualOptions& options = {});

/// CSV with columns y,residual,weight,weighted_abs and a '#' header carrying
/// n, seed, interval and nu. Requires a series kept with keep_series.
void write_residual_csv(std::ostream& out, const ResidualSeries& series);

}  // namespace bklab
