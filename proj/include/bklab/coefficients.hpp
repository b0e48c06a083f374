#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace bklab {

enum class CoefficientKind { PowerLaw, Geometric, Finite };

/// Moving-average weights c_0 = 1, c_1, c_2, ... of the linear process.
///
/// Power-law weights are c_k = (1 + k)^-tau * log(e + k)^-3/2 for k >= 1,
/// which have the regularly varying tail k^-tau (log k)^-3/2 without a log
/// singularity at k = 1. Tail sums of squares are tabulated up to
/// kTailTable and continued by the integral of the squared weight beyond.
class CoefficientSequence {
public:
    static constexpr std::size_t kTailTable = std::size_t{1} << 16;

    /// Throws ConditionError unless tau > 5/2 (the power-law admissibility bound).
    static CoefficientSequence power_law(double tau);
    /// c_k = r^k; throws DomainError unless |r| < 1.
    static CoefficientSequence geometric(double r);
    /// Explicit finite memory; values[0] must equal 1.
    static CoefficientSequence finite(std::vector<double> values);

    CoefficientKind kind() const { return kind_; }
    double tau() const { return param_; }
    double ratio() const { return param_; }
    std::span<const double> finite_values() const { return finite_; }
    std::string describe() const;

    double eval(std::size_t k) const;
    /// sum_{k >= i} c_k^2
    double tail_sq(std::size_t i) const;
    double sum_sq() const { return tail_sq(0); }
    double abs_sum() const { return abs_sum_; }

    /// Number of nonzero weights when the memory is finite (finite kind only).
    std::size_t memory() const { return finite_.size(); }
    /// True when c_k = 0 for every k >= 1.
    bool trivial() const;

    /// Weights c_0..c_{count-1}.
    std::vector<double> head(std::size_t count) const;

private:
    CoefficientSequence(CoefficientKind kind, double param, std::vector<double> finite);

    double power_tail_integral(double from) const;

    CoefficientKind kind_;
    double param_ = 0.0;
    std::vector<double> finite_;
    // Shared so copies stay cheap; tails_[i] = sum_{k >= i} c_k^2 for i <= kTailTable.
    std::shared_ptr<const std::vector<double>> tails_;
    double abs_sum_ = 0.0;
};

}  // namespace bklab
