#pragma once

// Direct O(n) / O(n^2) evaluators written from the definitions, used to
// cross-check the sweeping implementations.

#include <functional>
#include <vector>

namespace bklab::oracle {

struct Marginal {
    std::function<double(double)> cdf;
    std::function<double(double)> pdf;
    std::function<double(double)> quantile;
};

/// R_n(y) = f(Q(y)) sqrt(n) (Q(y) - X_{ceil(ny):n}) - sqrt(n) (#{U_i <= y} / n - y),
/// with U_i = F(X_i) recomputed from the raw sample.
double residual(const std::vector<double>& sample, const Marginal& m, double y);

/// max |R_n| over the given points.
double residual_sup(const std::vector<double>& sample, const Marginal& m, const std::vector<double>& grid);

/// sup_x |F_n(x) - F(x)| sqrt(n) from both one-sided limits at each sample point.
double sup_abs_beta(const std::vector<double>& sample, const Marginal& m);

/// sup over u, v in [0, 1], |u - v| <= d of |(E_n(u) - u) - (E_n(v) - v)| for a
/// uniform sample, scanning all pairs of candidate points {0, 1, U_i, U_i -+ d}
/// with both one-sided limits. O(n^2).
double increment_modulus(const std::vector<double>& pit, double d);

}  // namespace bklab::oracle
