#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bklab/model.hpp"
#include "bklab/oracle.hpp"

namespace bklab {

enum class ConvolutionMethod { Auto, Direct, Transform };

/// Realized X_1..X_n with one-step predictors X_{i,i-1} and the generating
/// innovations eps_{1-K}..eps_n.
///
/// Invariant: x[i] == eps(i + 1) + pred[i] bit for bit (c_0 = 1).
struct SamplePath {
    std::size_t n = 0;
    std::vector<double> x;
    std::vector<double> pred;
    /// Variance of the discarded far past per index; 0 when compensated.
    double eps_tail_var = 0.0;
    std::uint64_t seed = 0;
    std::string model_id;
    /// Fixed lag horizon K of the simulation.
    std::size_t horizon = 0;
    /// Innovations eps_{1-K}..eps_n; shared between a path and its truncation.
    std::shared_ptr<const std::vector<double>> innovations;
    /// Independent far-past terms folded into pred (Gaussian innovations only).
    std::shared_ptr<const std::vector<double>> compensator;
    /// Set for paths produced by truncate_path.
    std::optional<double> truncation_rho;

    bool has_innovations() const { return innovations != nullptr; }
    /// eps_i for 1 - K <= i <= n.
    double eps(std::ptrdiff_t i) const;
};

struct SimulateOptions {
    /// Overrides the model's relative truncation tolerance.
    std::optional<double> trunc_tol_rel;
    ConvolutionMethod method = ConvolutionMethod::Auto;
};

/// Direct convolution is used while K * n <= kDirectConvolutionLimit.
inline constexpr double kDirectConvolutionLimit = 1e8;

/// Simulates the stationary process with a fixed horizon K. Gaussian
/// innovations receive an independent N(0, var_eps * tail_sq(K + 1)) term per
/// index so the marginal law is exact. Deterministic in (model, n, seed).
SamplePath simulate_path(const LinearProcessModel& model, std::size_t n, std::uint64_t seed,
                         const SimulateOptions& options = {});

/// U_i = F(X_i), clamped to the open unit interval.
std::vector<double> pit_transform(const SamplePath& path, const MarginalOracle& oracle);

/// Number of retained lags ceil(i^rho) (at least 1) of the truncated process at index i.
std::size_t truncated_lag_count(std::size_t i, double rho);

/// Whether truncating to `lags` lags (beyond lag 0) reproduces the simulated
/// X_i: all K simulated lags are kept and, for compensated paths, the far
/// past beyond K as well (lags > K).
inline bool truncation_keeps_all(std::size_t lags, std::size_t horizon, bool compensated) {
    return lags > horizon || (lags == horizon && !compensated);
}

/// Companion path X_hat_i = sum_{k < ceil(i^rho)} c_k eps_{i-k} with the
/// matching truncated predictors. Once every simulated lag is retained
/// (ceil(i^rho) - 1 > K) the compensator is kept too and X_hat_i = X_i.
/// Throws StateError when the path does not carry its innovations.
SamplePath truncate_path(const SamplePath& path, const LinearProcessModel& model, double rho);

/// Text dump: '#'-prefixed header (model id, seed, n, K, tail variance)
/// followed by CSV rows "i,x,pred" with i starting at 1.
void write_path_dump(std::ostream& out, const SamplePath& path);

/// Writes pred into out, out[i-1] = sum_{k=1}^{K} c_k eps_{i-k}, from
/// innovations eps_{1-K}..eps_n laid out contiguously. Exposed for testing
/// the direct and transform routes against each other.
void convolve_predictors(std::span<const double> coefficients_1_to_k, std::span<const double> innovations,
                         std::span<double> out, ConvolutionMethod method);

}  // namespace bklab
