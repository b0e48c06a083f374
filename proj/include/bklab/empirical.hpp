#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bklab/oracle.hpp"

namespace bklab {

/// Order statistics of a sample.
struct EmpiricalSummary {
    std::size_t n = 0;
    std::vector<double> sorted;
    std::uint64_t source_seed = 0;
};

EmpiricalSummary summarize(std::span<const double> values, std::uint64_t source_seed = 0);

/// F_n(x) = #{X_i <= x} / n.
double edf(const EmpiricalSummary& s, double x);
/// Q_n(y) = X_{ceil(n y):n}; DomainError unless 0 < y <= 1.
double equantile(const EmpiricalSummary& s, double y);
/// ceil(n y) clamped to [1, n].
std::size_t equantile_rank(std::size_t n, double y);

/// beta_n(x) = sqrt(n) (F_n(x) - F(x)).
double beta_process(const EmpiricalSummary& s, const MarginalOracle& oracle, double x);
/// alpha_n(x) = sqrt(n) (E_n(x) - x) on the PIT sample.
double alpha_process(const EmpiricalSummary& pit, double x);
/// q_n(y) = sqrt(n) (Q(y) - Q_n(y)).
double q_process(const EmpiricalSummary& s, const MarginalOracle& oracle, double y);
/// u_n(y) = sqrt(n) (y - U_n(y)) on the PIT sample.
double u_process(const EmpiricalSummary& pit, double y);

/// One-sided offset placed around every jump point.
inline constexpr double kJumpOffset = 1e-12;

/// Sorted, duplicate-free evaluation grid in (a, b): k/n -+ offset, PIT order
/// statistics -+ offset and the `refine` points a + (b - a) j / (refine + 1).
/// Jump points themselves are not included; only their one-sided neighbours.
std::vector<double> jump_grid(const EmpiricalSummary& pit, double a, double b, std::size_t refine);

/// sup_x |beta_n(x)|, attained at one-sided limits at the order statistics.
double sup_abs_beta(const EmpiricalSummary& s, const MarginalOracle& oracle);
/// sup_{0<x<1} |alpha_n(x)|.
double sup_abs_alpha(const EmpiricalSummary& pit);
/// sup_{0<y<1} |u_n(y)|.
double sup_abs_u(const EmpiricalSummary& pit);

/// sup_{|u - v| <= d} |(E_n(u) - u) - (E_n(v) - v)| over [0, 1].
double increment_modulus(const EmpiricalSummary& pit, double d);

}  // namespace bklab
