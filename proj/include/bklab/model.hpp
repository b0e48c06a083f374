#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>

#include "bklab/coefficients.hpp"
#include "bklab/innovation.hpp"

namespace bklab {

/// Smallest K with coefficients.tail_sq(K + 1) <= tol^2. Throws ModelError
/// when no K <= max_horizon qualifies.
std::size_t truncation_horizon(const CoefficientSequence& coefficients, double tol,
                               std::size_t max_horizon = std::size_t{1} << 26);

/// One-sided moving average X_i = sum_k c_k eps_{i-k} together with the
/// truncation exponent rho and optional tail exponents of f(Q(y)).
class LinearProcessModel {
public:
    static constexpr double kDefaultTruncTol = 1e-6;

    /// Validates rho in (0, 1/2) (DomainError) and, for power-law weights,
    /// rho >= 2 / (2 tau - 1) (ConditionError).
    static LinearProcessModel create(InnovationModel innovations, CoefficientSequence coefficients,
                                     double rho, std::optional<double> gamma1 = std::nullopt,
                                     std::optional<double> gamma2 = std::nullopt,
                                     double trunc_tol_rel = kDefaultTruncTol);

    const InnovationModel& innovations() const { return innovations_; }
    const CoefficientSequence& coefficients() const { return coefficients_; }
    double rho() const { return rho_; }
    const std::optional<double>& gamma1() const { return gamma1_; }
    const std::optional<double>& gamma2() const { return gamma2_; }

    /// Truncation tolerance relative to sqrt(sum c_k^2).
    double trunc_tol_rel() const { return trunc_tol_rel_; }
    /// Absolute tolerance on sqrt(tail_sq) in coefficient units.
    double trunc_tol() const;
    /// truncation_horizon(coefficients, trunc_tol()), fixed at construction.
    std::size_t horizon() const;

    /// Standard deviation of X (infinite when the innovation variance is).
    double marginal_sd() const;
    bool gaussian() const { return innovations_.family() == InnovationFamily::Normal; }
    /// c_k = 0 for k >= 1: the process is i.i.d.
    bool iid() const { return coefficients_.trivial(); }

    std::string id() const;

private:
    LinearProcessModel(InnovationModel innovations, CoefficientSequence coefficients, double rho,
                       std::optional<double> gamma1, std::optional<double> gamma2, double trunc_tol_rel);

    InnovationModel innovations_;
    CoefficientSequence coefficients_;
    double rho_;
    std::optional<double> gamma1_;
    std::optional<double> gamma2_;
    double trunc_tol_rel_;
    std::size_t horizon_;
};

/// Result of checking sum_{k>=i} c_k^2 = O(i^{-2/rho} (log i)^{-3}).
struct AdmissibilityReport {
    double rho = 0.0;
    std::size_t i_min = 0;
    std::size_t i_max = 0;
    /// sup over dyadic i in [i_min, i_max] of tail_sq(i) i^{2/rho} (log i)^3.
    double sup_scaled = 0.0;
    /// Log-log slope of the scaled tail over the upper half of the dyadic range.
    double tail_slope = 0.0;
    bool bounded = false;
    /// Power-law only: tau > 5/2 and rho >= 2/(2 tau - 1).
    std::optional<bool> analytic_admissible;
    /// Power-law only: [2/(2 tau - 1), 1/2).
    std::optional<std::pair<double, double>> admissible_rho;
    bool admissible = false;
    std::string message;
};

/// Throws DomainError unless rho is in (0, 1/2).
AdmissibilityReport check_dependence_condition(const CoefficientSequence& coefficients, double rho);

/// Grid used by validate_innovation: points j * step with lower <= x <= upper.
struct SmoothnessGrid {
    double lower = 0.0;
    double upper = 0.0;
    double step = 0.0;
};

/// Default grid: the innovation's 5e-9 and 1 - 5e-9 quantiles at step 1e-3 * scale.
SmoothnessGrid default_smoothness_grid(const InnovationModel& innovations);

struct SmoothnessReport {
    double sup_pdf = 0.0;
    double sup_abs_deriv = 0.0;
    double sup_abs_deriv2 = 0.0;
    /// Largest |central difference of pdf - pdf_deriv| on the grid.
    double max_deriv_mismatch = 0.0;
    /// Largest |central difference of pdf_deriv - pdf_deriv2| on the grid.
    double max_deriv2_mismatch = 0.0;
    bool violation = false;
    double violation_at = 0.0;
    /// E|eps|^alpha finite for some alpha >= 2.
    bool moments_ok = false;
    std::size_t grid_points = 0;
};

/// Numerical check of sup (f + |f'| + |f''|) < infinity. Report-only.
SmoothnessReport validate_innovation(const InnovationModel& innovations, const SmoothnessGrid& grid);
SmoothnessReport validate_innovation(const InnovationModel& innovations);

}  // namespace bklab
