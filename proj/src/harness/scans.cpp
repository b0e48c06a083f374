#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <numeric>

#include "bklab/bk.hpp"
#include "bklab/decomp.hpp"
#include "bklab/empirical.hpp"
#include "bklab/errors.hpp"
#include "bklab/harness.hpp"
#include "bklab/paths.hpp"
#include "bklab/rng.hpp"

namespace bklab {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double lil_norm(double n) { return std::sqrt(2.0 * std::log(std::log(n))); }

double sample_quantile(const std::vector<double>& sorted, double p) {
    return sorted[equantile_rank(sorted.size(), p) - 1];
}

struct ScanContext {
    LinearProcessModel model;
    MarginalOracle oracle;
    ModelCheck check;
};

ScanContext prepare(const ExperimentConfig& config) {
    auto check = require_model(config);
    auto model = build_model(config.model);
    auto oracle = build_marginal_oracle(model, config.model.mixture_points, config.model.oracle_seed);
    return {std::move(model), std::move(oracle), std::move(check)};
}

}  // namespace

double increment_window(const ExperimentConfig& config, std::size_t n) {
    const double d = config.increment.rule == "lambda" ? rate_lambda(static_cast<double>(n)) : config.increment.custom;
    const double nn = static_cast<double>(n);
    if (!(d > 0.0 && d <= 1.0)) throw ConfigError(fmt::format("increment window d_n = {} outside (0, 1]", d));
    if (!(nn * d / std::log(nn) >= 10.0)) {
        throw ConfigError(fmt::format("increment window d_n = {:.4g} too small at n = {}: n d_n / log n = {:.3g} < 10",
                                      d, n, nn * d / std::log(nn)));
    }
    return d;
}

RateScanResult run_scan(const ExperimentConfig& config, const ScanParts& parts, std::size_t threads) {
    if (config.n_grid.empty()) throw ConfigError("n_grid is empty");
    const auto ctx = prepare(config);
    const auto& model = ctx.model;
    const auto& oracle = ctx.oracle;
    const std::size_t reps = config.replicates;
    const auto seeds = enumerate_seeds(config.master_seed, config.n_grid, reps);
    if (parts.increments) {
        for (std::size_t n : config.n_grid) increment_window(config, n);
    }
    std::optional<double> gamma = ctx.check.gamma;

    RateScanResult result;
    result.model_id = model.id();
    result.gamma = gamma;
    for (const auto& w : oracle.warnings()) result.warnings.push_back(w);
    result.rows.resize(seeds.size());

    parallel_for(seeds.size(), threads, [&](std::size_t idx) {
        const std::size_t n = config.n_grid[idx / reps];
        const std::size_t r = idx % reps;
        ScanRow row;
        row.n = n;
        row.replicate = r;
        row.seed = seeds[idx];
        const double nn = static_cast<double>(n);

        const auto path = simulate_path(model, n, row.seed);
        const auto u = pit_transform(path, oracle);
        const auto s = summarize(path.x, row.seed);
        const auto pit = summarize(u, row.seed);

        if (parts.residuals) {
            ResidualOptions opts;
            opts.keep_series = false;
            opts.refinement_check = r < parts.refinement_checks;
            const auto res = residual_sup(s, pit, oracle, config.a, config.b, config.refine * n, std::nullopt, opts);
            row.sup_abs = res.sup_abs;
            row.sup_abs_doubled = res.sup_abs_doubled;
            row.pointwise_mid = residual_pointwise(s, pit, oracle, 0.5);
            row.weighted_sup = kNaN;
            if (config.nu) {
                ResidualOptions wopts;
                wopts.keep_series = false;
                row.weighted_sup =
                    weighted_residual_sup(s, pit, oracle, *config.nu, *gamma, config.refine * n, wopts).weighted_sup;
            }
        } else {
            row.sup_abs = row.weighted_sup = row.pointwise_mid = kNaN;
        }
        if (parts.lil) {
            row.lil_beta = sup_abs_beta(s, oracle) / lil_norm(nn);
            row.lil_u = sup_abs_u(pit) / lil_norm(nn);
        } else {
            row.lil_beta = row.lil_u = kNaN;
        }
        if (parts.increments) {
            row.d_n = increment_window(config, n);
            row.modulus = increment_modulus(pit, row.d_n);
            row.modulus_normalized = row.modulus * std::sqrt(nn) / std::sqrt(row.d_n * std::log(nn));
        } else {
            row.d_n = row.modulus = row.modulus_normalized = kNaN;
        }
        result.rows[idx] = row;
    });

    std::vector<std::pair<double, double>> sup_pairs;
    std::vector<std::pair<double, double>> weighted_pairs;
    std::vector<std::pair<double, double>> mid_pairs;
    std::vector<std::pair<double, double>> lil_beta_pairs;
    std::vector<std::pair<double, double>> lil_u_pairs;
    std::vector<std::pair<double, double>> inc_pairs;
    for (std::size_t g = 0; g < config.n_grid.size(); ++g) {
        const auto first = result.rows.begin() + static_cast<std::ptrdiff_t>(g * reps);
        const std::vector<ScanRow> rows(first, first + static_cast<std::ptrdiff_t>(reps));
        auto column = [&](auto getter) {
            std::vector<double> v;
            v.reserve(rows.size());
            for (const auto& row : rows) v.push_back(getter(row));
            return v;
        };
        ScanSummary sm;
        sm.n = config.n_grid[g];
        sm.replicates = reps;
        const double nn = static_cast<double>(sm.n);
        if (parts.residuals) {
            const auto sup = column([](const ScanRow& r) { return r.sup_abs; });
            sm.sup_abs_mean = std::accumulate(sup.begin(), sup.end(), 0.0) / static_cast<double>(reps);
            sm.sup_abs_median = median(sup);
            sm.sup_abs_max = *std::max_element(sup.begin(), sup.end());
            sm.pointwise_abs_median = median(column([](const ScanRow& r) { return std::fabs(r.pointwise_mid); }));
            for (const auto& row : rows) {
                if (row.sup_abs_doubled && row.sup_abs > 0.0) {
                    sm.refine_rel_change =
                        std::max(sm.refine_rel_change, (*row.sup_abs_doubled - row.sup_abs) / row.sup_abs);
                }
            }
            sup_pairs.emplace_back(nn, sm.sup_abs_median);
            mid_pairs.emplace_back(nn, sm.pointwise_abs_median);
            if (config.nu) {
                const auto w = column([](const ScanRow& r) { return r.weighted_sup; });
                sm.weighted_median = median(w);
                sm.weighted_max = *std::max_element(w.begin(), w.end());
                weighted_pairs.emplace_back(nn, sm.weighted_median);
            } else {
                sm.weighted_median = sm.weighted_max = kNaN;
            }
        } else {
            sm.sup_abs_mean = sm.sup_abs_median = sm.sup_abs_max = kNaN;
            sm.weighted_median = sm.weighted_max = sm.pointwise_abs_median = kNaN;
        }
        if (parts.lil) {
            const auto lb = column([](const ScanRow& r) { return r.lil_beta; });
            const auto lu = column([](const ScanRow& r) { return r.lil_u; });
            sm.lil_beta_median = median(lb);
            sm.lil_beta_max = *std::max_element(lb.begin(), lb.end());
            sm.lil_u_median = median(lu);
            sm.lil_u_max = *std::max_element(lu.begin(), lu.end());
            lil_beta_pairs.emplace_back(nn, sm.lil_beta_median);
            lil_u_pairs.emplace_back(nn, sm.lil_u_median);
        } else {
            sm.lil_beta_median = sm.lil_beta_max = sm.lil_u_median = sm.lil_u_max = kNaN;
        }
        if (parts.increments) {
            sm.modulus_normalized_median = median(column([](const ScanRow& r) { return r.modulus_normalized; }));
            inc_pairs.emplace_back(nn, sm.modulus_normalized_median);
        } else {
            sm.modulus_normalized_median = kNaN;
        }
        if (sm.refine_rel_change > 1e-3) {
            result.warnings.push_back(fmt::format(
                "n = {}: doubling the refinement changes sup_abs by {:.3g} (relative)", sm.n, sm.refine_rel_change));
        }
        result.summaries.push_back(sm);
    }

    if (config.n_grid.size() >= 3) {
        const auto one = [](double) { return 1.0; };
        if (parts.residuals) {
            result.fits.push_back({"sup_abs", "b_n", fit_rate(sup_pairs)});
            result.fits.push_back({"pointwise_mid", "kiefer_pointwise",
                                   fit_rate(mid_pairs, [](double n) { return rate_kiefer_pointwise(n); })});
            if (config.nu) result.fits.push_back({"weighted_sup", "b_n", fit_rate(weighted_pairs)});
        }
        if (parts.lil) {
            result.fits.push_back({"lil_beta", "1", fit_rate(lil_beta_pairs, one)});
            result.fits.push_back({"lil_u", "1", fit_rate(lil_u_pairs, one)});
        }
        if (parts.increments) result.fits.push_back({"increment_normalized", "1", fit_rate(inc_pairs, one)});
    } else {
        result.warnings.push_back("fewer than 3 grid points; no rate fit");
    }
    return result;
}

RateScanResult run_rate_scan(const ExperimentConfig& config, std::size_t threads) {
    return run_scan(config, ScanParts{}, threads);
}

RateScanResult run_lil_scan(const ExperimentConfig& config, std::size_t threads) {
    ScanParts parts;
    parts.residuals = false;
    parts.refinement_checks = 0;
    return run_scan(config, parts, threads);
}

RateScanResult run_increment_check(const ExperimentConfig& config, std::size_t threads) {
    ScanParts parts;
    parts.residuals = false;
    parts.lil = false;
    parts.increments = true;
    parts.refinement_checks = 0;
    return run_scan(config, parts, threads);
}

CovarianceCheckResult run_covariance_check(const ExperimentConfig& config, std::size_t threads) {
    const auto ctx = prepare(config);
    const auto& model = ctx.model;
    const auto& oracle = ctx.oracle;
    const auto& cov = config.covariance;
    const std::size_t nx = cov.x_grid.size();
    const std::size_t reps = cov.replicates;
    if (nx == 0) throw ConfigError("covariance.x_grid is empty");
    if (cov.mc_draws < 1000) throw ConfigError("covariance.mc_draws must be at least 1000");
    if (cov.lag_horizon < 1) throw ConfigError("covariance.lag_horizon must be at least 1");
    for (std::size_t n : cov.n) {
        if (n < 1) throw ConfigError("covariance.n entries must be positive");
    }

    CovarianceCheckResult result;
    result.model_id = model.id();

    // Gamma on the x grid, upper triangle.
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < nx; ++i) {
        for (std::size_t j = i; j < nx; ++j) pairs.emplace_back(i, j);
    }
    result.grid.resize(pairs.size());
    parallel_for(pairs.size(), threads, [&](std::size_t k) {
        result.grid[k] = covariance_gamma(model, oracle, cov.x_grid[pairs[k].first], cov.x_grid[pairs[k].second],
                                          cov.lag_horizon, cov.mc_draws, cov.seed);
    });
    Eigen::MatrixXd gamma(static_cast<Eigen::Index>(nx), static_cast<Eigen::Index>(nx));
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto i = static_cast<Eigen::Index>(pairs[k].first);
        const auto j = static_cast<Eigen::Index>(pairs[k].second);
        gamma(i, j) = gamma(j, i) = result.grid[k].gamma;
        if (result.grid[k].horizon_warning) result.warnings.push_back(result.grid[k].warning);
    }

    // Gaussian limit draws for the quantile comparison.
    std::vector<std::vector<double>> limit(nx);
    try {
        const GaussianLimitSampler sampler(gamma);
        for (std::size_t d = 0; d < cov.limit_draws; ++d) {
            const auto v = sampler.sample(derive_seed(cov.seed, 0x4B, d));
            for (std::size_t i = 0; i < nx; ++i) limit[i].push_back(v[i]);
        }
        for (auto& l : limit) std::sort(l.begin(), l.end());
    } catch (const NumericalError& e) {
        result.warnings.push_back(fmt::format("Gaussian limit sampling skipped: {}", e.what()));
        for (auto& l : limit) l.clear();
    }

    static constexpr double kProbes[] = {0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95};
    for (std::size_t n : cov.n) {
        std::vector<std::vector<double>> stat(nx, std::vector<double>(reps));
        parallel_for(reps, threads, [&](std::size_t r) {
            const auto path = simulate_path(model, n, derive_seed(config.master_seed, n, r));
            for (std::size_t i = 0; i < nx; ++i) {
                stat[i][r] = std::sqrt(static_cast<double>(n)) * decompose(path, oracle, cov.x_grid[i]).N;
            }
        });
        for (std::size_t i = 0; i < nx; ++i) {
            auto& v = stat[i];
            const double m = static_cast<double>(reps);
            double mean = 0.0;
            for (double t : v) mean += t;
            mean /= m;
            double m2 = 0.0;
            double m4 = 0.0;
            for (double t : v) {
                const double d = t - mean;
                m2 += d * d;
                m4 += d * d * d * d;
            }
            CovarianceRow row;
            row.n = n;
            row.x = cov.x_grid[i];
            row.replicates = reps;
            row.replicate_var = m2 / (m - 1.0);
            const double pop_var = m2 / m;
            row.replicate_var_se = std::sqrt(std::max(0.0, m4 / m - pop_var * pop_var) / m);
            // Diagonal entries sit at k = i * nx - i (i - 1) / 2 in the upper-triangle order.
            const auto& est = result.grid[i * nx - i * (i - 1) / 2];
            row.gamma = est.gamma;
            row.gamma_se = est.std_error;
            row.lag_horizon = est.lag_horizon;
            row.mc_draws = est.mc_draws;
            row.gamma_horizon_warning = est.horizon_warning;
            const double band =
                0.1 * std::fabs(row.gamma) + 3.0 * std::hypot(row.replicate_var_se, row.gamma_se);
            row.agree = std::fabs(row.replicate_var - row.gamma) <= band;
            row.qq_max_dev = kNaN;
            if (!limit[i].empty() && row.gamma > 0.0) {
                std::sort(v.begin(), v.end());
                double dev = 0.0;
                for (double p : kProbes) {
                    dev = std::max(dev, std::fabs(sample_quantile(v, p) - sample_quantile(limit[i], p)));
                }
                row.qq_max_dev = dev / std::sqrt(row.gamma);
            }
            result.rows.push_back(row);
        }
    }
    return result;
}

}  // namespace bklab
