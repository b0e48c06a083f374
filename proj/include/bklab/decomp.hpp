#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bklab/model.hpp"
#include "bklab/oracle.hpp"
#include "bklab/paths.hpp"

namespace bklab {

/// F_n(x) - F(x) = M_n(x) + N_n(x) at one point.
struct DecompositionAt {
    double x = 0.0;
    /// (1/n) sum (1{X_i <= x} - F_eps(x - X_{i,i-1}))
    double M = 0.0;
    /// (1/n) sum (F_eps(x - X_{i,i-1}) - F(x))
    double N = 0.0;
    /// sqrt(n) (M + N)
    double beta_check = 0.0;
};

DecompositionAt decompose(const SamplePath& path, const MarginalOracle& oracle, double x);

/// out[i] = F_eps(x - pred[i]).
void conditional_cdf(const InnovationModel& innovations, std::span<const double> pred, double x,
                     std::span<double> out);

/// Y_i(x) = F_eps(x - X_{i,i-1}) - F(x), i = 1..n.
std::vector<double> summands(const SamplePath& path, const MarginalOracle& oracle, double x);

/// Marginal oracles of the truncated predictors, one per distinct lag count.
/// Indices whose truncation keeps every simulated lag use the full oracle.
/// Thread-safe.
class TruncatedOracleCache {
public:
    TruncatedOracleCache(const LinearProcessModel& model, const MarginalOracle& full, std::size_t mixture_points,
                         std::uint64_t seed);

    const MarginalOracle& full() const { return *full_; }
    /// Oracle of X_hat with `lag_count` retained lags (lags 0..lag_count-1).
    const MarginalOracle& get(std::size_t lag_count) const;
    std::size_t size() const;

private:
    const LinearProcessModel* model_;
    const MarginalOracle* full_;
    std::size_t mixture_points_;
    std::uint64_t seed_;
    mutable std::mutex mutex_;
    mutable std::map<std::size_t, std::unique_ptr<MarginalOracle>> cache_;
};

/// Y_hat_i(x) = F_eps(x - X_hat_{i,i-1}) - F_hat_i(x) on a truncated path.
std::vector<double> truncated_summands(const SamplePath& truncated, const TruncatedOracleCache& oracles, double x);

struct CovarianceEstimate {
    double x = 0.0;
    double y = 0.0;
    double gamma = 0.0;
    std::size_t lag_horizon = 0;
    std::size_t mc_draws = 0;
    double std_error = 0.0;
    /// Estimate truncated at lag_horizon / 2 from the same draws.
    double gamma_half = 0.0;
    /// |gamma - gamma_half| >= 2 stderr.
    bool horizon_warning = false;
    std::string warning;
};

/// Monte Carlo estimate of
///   Gamma(x, y) = E Y_0(x) Y_0(y) + sum_{i=1}^{L} (E Y_0(x) Y_i(y) + E Y_0(y) Y_i(x)),
/// one simulated stretch of L + 1 consecutive predictors per draw. Symmetric
/// in (x, y) bit for bit for a fixed seed.
CovarianceEstimate covariance_gamma(const LinearProcessModel& model, const MarginalOracle& oracle, double x, double y,
                                    std::size_t lag_horizon, std::size_t mc_draws, std::uint64_t seed);

struct CovarianceGrid {
    std::vector<double> points;
    Eigen::MatrixXd gamma;
    Eigen::MatrixXd std_error;
    std::vector<CovarianceEstimate> entries;  // upper triangle, row-major
};

CovarianceGrid covariance_grid(const LinearProcessModel& model, const MarginalOracle& oracle,
                               std::span<const double> points, std::size_t lag_horizon, std::size_t mc_draws,
                               std::uint64_t seed);

/// CSV columns x,y,gamma,stderr,L,mc_draws.
void write_covariance_csv(std::ostream& out, std::span<const CovarianceEstimate> entries);

/// Alternating I_1, J_1, I_2, J_2, ... blocks of length floor(n^rho) over [1, n].
struct BlockingLayout {
    std::size_t n = 0;
    double rho = 0.0;
    std::size_t block_len = 0;
    /// Half-open 0-based index ranges; even positions are I blocks, odd are J blocks.
    std::vector<std::pair<std::size_t, std::size_t>> blocks;
    /// Number of I blocks.
    std::size_t pairs = 0;
};

/// Throws DomainError when n < 2 floor(n^rho).
BlockingLayout make_blocking(std::size_t n, double rho);

struct BlockSums {
    std::vector<double> u;  // I-block sums of Y_hat_i(x, y)
    std::vector<double> v;  // J-block sums
    double total = 0.0;
};

/// Block sums of Y_hat_i(x, y) = Y_hat_i(y) - Y_hat_i(x); requires x < y.
BlockSums blocked_sums(const SamplePath& truncated, const TruncatedOracleCache& oracles,
                       const BlockingLayout& layout, double x, double y);

struct ExceedanceStats {
    std::vector<double> z;
    std::vector<double> frequency;
    /// Slopes of log frequency against z^2 / (n (y - x)^2) and against log z,
    /// over thresholds with nonzero frequency.
    double slope_vs_z2 = 0.0;
    double slope_vs_log_z = 0.0;
};

/// Exceedance frequencies of |total| over the thresholds z across replicates.
ExceedanceStats exceedance_stats(std::span<const double> totals, std::span<const double> z, std::size_t n,
                                 double x, double y);

/// Pooled lag-1 correlation of consecutive I-block sums across replicates.
double lag1_correlation(std::span<const BlockSums> replicates);

/// Draws from the centered Gaussian with covariance Gamma through a
/// symmetric eigen-factorization with 1e-10 trace / d diagonal jitter.
class GaussianLimitSampler {
public:
    /// Throws NumericalError when the jittered matrix is not positive
    /// semidefinite, DomainError when it is not square and symmetric.
    explicit GaussianLimitSampler(const Eigen::MatrixXd& gamma);

    std::vector<double> sample(std::uint64_t seed) const;
    Eigen::Index dim() const { return factor_.rows(); }
    const Eigen::MatrixXd& factor() const { return factor_; }

private:
    Eigen::MatrixXd factor_;
};

std::vector<double> gaussian_limit_sample(const Eigen::MatrixXd& gamma, std::uint64_t seed);

}  // namespace bklab
