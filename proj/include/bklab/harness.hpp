#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <json.hpp>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bklab/decomp.hpp"
#include "bklab/model.hpp"
#include "bklab/oracle.hpp"

namespace bklab {

// ---------------------------------------------------------------- config

struct InnovationSpec {
    std::string family = "normal";
    double scale = 1.0;
    double lower = 0.0;
    double upper = 1.0;
    double rate = 1.0;
    double dof = 5.0;
};

struct CoefficientSpec {
    std::string kind = "finite";
    double tau = 3.0;
    double r = 0.5;
    std::vector<double> values{1.0};
};

struct ModelSpec {
    InnovationSpec innovation;
    CoefficientSpec coefficients;
    /// Required except for power-law weights, where it defaults to the
    /// midpoint of the admissible interval [2/(2 tau - 1), 1/2).
    std::optional<double> rho;
    std::optional<double> gamma1;
    std::optional<double> gamma2;
    double trunc_tol = LinearProcessModel::kDefaultTruncTol;
    std::size_t mixture_points = MarginalOracle::kDefaultMixturePoints;
    std::uint64_t oracle_seed = 0;
};

struct IncrementSpec {
    /// "lambda" (d_n = lambda_n) or "custom".
    std::string rule = "lambda";
    double custom = 0.0;
};

struct CovarianceSpec {
    std::vector<double> x_grid{-1.0, 0.0, 1.0};
    std::vector<std::size_t> n{16384};
    std::size_t replicates = 1000;
    std::size_t lag_horizon = 32;
    std::size_t mc_draws = 20000;
    std::uint64_t seed = 0;
    /// Draws of the Gaussian limit vector used for the quantile comparison.
    std::size_t limit_draws = 10000;
};

struct SimulateSpec {
    std::size_t n = 1000;
    std::optional<std::uint64_t> seed;
};

/// Parsed experiment configuration (JSON, schema version 1). See README.
struct ExperimentConfig {
    int version = 1;
    ModelSpec model;
    std::vector<std::size_t> n_grid;
    std::size_t replicates = 1;
    std::uint64_t master_seed = 0;
    double a = 0.05;
    double b = 0.95;
    std::optional<double> nu;
    /// Uniform refinement points per sample point (refine * n in total).
    std::size_t refine = 4;
    IncrementSpec increment;
    CovarianceSpec covariance;
    SimulateSpec simulate;
    std::string outputs = "out";
    /// The document the config was parsed from, echoed into manifests.
    nlohmann::json source;
};

/// Throws ConfigError on malformed input or unknown keys.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

InnovationModel build_innovation(const InnovationSpec& spec);
CoefficientSequence build_coefficients(const CoefficientSpec& spec);
/// Builds the model; condition violations surface as ConditionError or DomainError.
LinearProcessModel build_model(const ModelSpec& spec);

// ---------------------------------------------------------------- condition gates

struct ModelCheck {
    std::string model_id;
    AdmissibilityReport admissibility;
    SmoothnessReport smoothness;
    /// Smoothness is enforced only for models with a nontrivial past.
    bool smoothness_enforced = false;
    std::optional<double> gamma;
    bool gamma_estimated = false;
    std::optional<double> nu_min;
    std::vector<std::string> failures;
    std::vector<std::string> notes;
    bool ok() const { return failures.empty(); }
};

/// Runs every gate. Errors raised while building the model (tau, rho)
/// propagate; gate failures are collected in `failures`.
ModelCheck check_model(const ExperimentConfig& config);
/// check_model followed by a ConditionError carrying the first failure.
ModelCheck require_model(const ExperimentConfig& config);

// ---------------------------------------------------------------- execution

/// Worker count for `threads` (0 means hardware concurrency).
std::size_t resolve_threads(std::size_t threads);

/// Runs fn(0..count-1) on `threads` workers. Exceptions are rethrown from the
/// lowest failing index, so failures do not depend on scheduling.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn);

/// Distinct derived seeds for every (n, r) of the grid; throws ConfigError on a collision.
std::vector<std::uint64_t> enumerate_seeds(std::uint64_t master, std::span<const std::size_t> n_grid,
                                           std::size_t replicates);

// ---------------------------------------------------------------- fitting

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    /// max / min of statistic / normalizer(n).
    double ratio_stability = 0.0;
};

/// Least squares of log statistic on log n, ratio stability against rate_b.
/// ConfigError for fewer than 3 pairs, NumericalError for a nonpositive statistic.
RateFit fit_rate(std::span<const std::pair<double, double>> pairs);
RateFit fit_rate(std::span<const std::pair<double, double>> pairs, const std::function<double(double)>& normalizer);
/// max / min of the statistics themselves.
double spread_ratio(std::span<const double> values);
double median(std::vector<double> values);

// ---------------------------------------------------------------- scans

struct ScanParts {
    bool residuals = true;
    bool lil = true;
    bool increments = false;
    /// Replicates per n that also evaluate the refinement-doubled sup.
    std::size_t refinement_checks = 1;
};

struct ScanRow {
    std::size_t n = 0;
    std::size_t replicate = 0;
    std::uint64_t seed = 0;
    double sup_abs = 0.0;
    double weighted_sup = 0.0;  // NaN without nu
    double pointwise_mid = 0.0;
    double lil_beta = 0.0;
    double lil_u = 0.0;
    double d_n = 0.0;
    double modulus = 0.0;
    double modulus_normalized = 0.0;
    std::optional<double> sup_abs_doubled;
};

struct ScanSummary {
    std::size_t n = 0;
    std::size_t replicates = 0;
    double sup_abs_mean = 0.0, sup_abs_median = 0.0, sup_abs_max = 0.0;
    double weighted_median = 0.0, weighted_max = 0.0;
    double pointwise_abs_median = 0.0;
    double lil_beta_median = 0.0, lil_beta_max = 0.0;
    double lil_u_median = 0.0, lil_u_max = 0.0;
    double modulus_normalized_median = 0.0;
    /// Largest relative change of sup_abs under refinement doubling.
    double refine_rel_change = 0.0;
};

struct NamedFit {
    std::string statistic;
    std::string normalizer;
    RateFit fit;
};

struct RateScanResult {
    std::string model_id;
    std::vector<ScanRow> rows;  // ordered by (n, replicate)
    std::vector<ScanSummary> summaries;
    std::vector<NamedFit> fits;
    std::optional<double> gamma;
    std::vector<std::string> warnings;
};

/// Runs the replicated scan over config.n_grid. Aborts with ConditionError
/// when a model gate fails. Output is independent of `threads`.
RateScanResult run_scan(const ExperimentConfig& config, const ScanParts& parts, std::size_t threads = 1);
RateScanResult run_rate_scan(const ExperimentConfig& config, std::size_t threads = 1);
RateScanResult run_lil_scan(const ExperimentConfig& config, std::size_t threads = 1);
RateScanResult run_increment_check(const ExperimentConfig& config, std::size_t threads = 1);

/// d_n for the configured rule; ConfigError when d_n > 1 or n d_n / log n < 10.
double increment_window(const ExperimentConfig& config, std::size_t n);

struct CovarianceRow {
    std::size_t n = 0;
    double x = 0.0;
    std::size_t replicates = 0;
    double replicate_var = 0.0;
    double replicate_var_se = 0.0;
    double gamma = 0.0;
    double gamma_se = 0.0;
    std::size_t lag_horizon = 0;
    std::size_t mc_draws = 0;
    bool gamma_horizon_warning = false;
    /// |var - gamma| <= 0.1 gamma + 3 sqrt(se_var^2 + se_gamma^2).
    bool agree = false;
    /// Largest |sample quantile - limit quantile| / sqrt(gamma) over the probe levels.
    double qq_max_dev = 0.0;
};

struct CovarianceCheckResult {
    std::string model_id;
    std::vector<CovarianceRow> rows;
    std::vector<CovarianceEstimate> grid;
    std::vector<std::string> warnings;
};

CovarianceCheckResult run_covariance_check(const ExperimentConfig& config, std::size_t threads = 1);

// ---------------------------------------------------------------- output

inline constexpr const char* kToolVersion = BKLAB_VERSION;

void write_rate_scan_csv(std::ostream& out, const RateScanResult& result);
void write_lil_scan_csv(std::ostream& out, const RateScanResult& result);
void write_increments_csv(std::ostream& out, const RateScanResult& result);
void write_summary_csv(std::ostream& out, const RateScanResult& result);
void write_fit_csv(std::ostream& out, const RateScanResult& result);
void write_covariance_check_csv(std::ostream& out, const CovarianceCheckResult& result);

/// Echoed config, seed derivation rule and derived seeds, tool version and kernel ISA.
nlohmann::json make_manifest(const ExperimentConfig& config, const std::string& command,
                             std::span<const std::uint64_t> seeds);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace bklab
