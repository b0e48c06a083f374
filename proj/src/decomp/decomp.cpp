#include "bklab/decomp.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <limits>
#include <numeric>
#include <ostream>

#include "bklab/errors.hpp"
#include "bklab/kernels.hpp"
#include "bklab/rng.hpp"

namespace bklab {
namespace {

// Neumaier compensated summation.
class Sum {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::fabs(sum_) >= std::fabs(v)) {
            comp_ += (sum_ - t) + v;
        } else {
            comp_ += (v - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

double ls_slope(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    const double k = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / k;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / k;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    return sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

void conditional_cdf(const InnovationModel& innovations, std::span<const double> pred, double x,
                     std::span<double> out) {
    if (pred.size() != out.size()) throw DomainError("conditional_cdf size mismatch");
    switch (innovations.family()) {
        case InnovationFamily::Normal:
        case InnovationFamily::Logistic: {
            std::vector<double> d(pred.size());
            for (std::size_t i = 0; i < pred.size(); ++i) d[i] = x - pred[i];
            if (innovations.family() == InnovationFamily::Normal) {
                kernels::normal_cdf(d, out, 0.0, innovations.scale());
            } else {
                kernels::logistic_cdf(d, out, 0.0, innovations.scale());
            }
            return;
        }
        default:
            for (std::size_t i = 0; i < pred.size(); ++i) out[i] = innovations.cdf(x - pred[i]);
    }
}

DecompositionAt decompose(const SamplePath& path, const MarginalOracle& oracle, double x) {
    if (path.pred.size() != path.n || path.x.size() != path.n) throw StateError("path does not carry predictors");
    if (path.n == 0) throw DomainError("empty path");
    const double fx = oracle.cdf(x);
    std::vector<double> cond(path.n, fx);
    // Under independence the conditional law is the marginal one; skipping the
    // kernel keeps N exactly zero instead of a rounding difference of two routes.
    if (oracle.exact_kind() != MarginalOracle::Exact::Innovation) {
        conditional_cdf(oracle.innovations(), path.pred, x, cond);
    }
    Sum m;
    Sum nn;
    for (std::size_t i = 0; i < path.n; ++i) {
        m.add((path.x[i] <= x ? 1.0 : 0.0) - cond[i]);
        nn.add(cond[i] - fx);
    }
    const double count = static_cast<double>(path.n);
    DecompositionAt out;
    out.x = x;
    out.M = m.value() / count;
    out.N = nn.value() / count;
    out.beta_check = std::sqrt(count) * (out.M + out.N);
    return out;
}

std::vector<double> summands(const SamplePath& path, const MarginalOracle& oracle, double x) {
    std::vector<double> y(path.n);
    if (oracle.exact_kind() == MarginalOracle::Exact::Innovation) return y;
    conditional_cdf(oracle.innovations(), path.pred, x, y);
    const double fx = oracle.cdf(x);
    for (auto& v : y) v -= fx;
    return y;
}

TruncatedOracleCache::TruncatedOracleCache(const LinearProcessModel& model, const MarginalOracle& full,
                                           std::size_t mixture_points, std::uint64_t seed)
    : model_(&model), full_(&full), mixture_points_(mixture_points), seed_(seed) {}

const MarginalOracle& TruncatedOracleCache::get(std::size_t lag_count) const {
    std::lock_guard lock(mutex_);
    auto it = cache_.find(lag_count);
    if (it == cache_.end()) {
        auto oracle = std::make_unique<MarginalOracle>(build_truncated_oracle(
            *model_, lag_count, mixture_points_, splitmix64(seed_ ^ lag_count), full_->exact()));
        it = cache_.emplace(lag_count, std::move(oracle)).first;
    }
    return *it->second;
}

std::size_t TruncatedOracleCache::size() const {
    std::lock_guard lock(mutex_);
    return cache_.size();
}

std::vector<double> truncated_summands(const SamplePath& truncated, const TruncatedOracleCache& oracles, double x) {
    if (!truncated.truncation_rho) throw StateError("path was not produced by truncate_path");
    const double rho = *truncated.truncation_rho;
    std::vector<double> y(truncated.n);
    if (oracles.full().exact_kind() == MarginalOracle::Exact::Innovation) return y;
    conditional_cdf(oracles.full().innovations(), truncated.pred, x, y);
    const bool compensated = truncated.compensator != nullptr;
    // Lag counts are nondecreasing in i, so each oracle is looked up once per run.
    std::size_t current = 0;
    double f_hat = 0.0;
    for (std::size_t i = 1; i <= truncated.n; ++i) {
        const std::size_t lag_count = truncated_lag_count(i, rho);
        if (lag_count != current) {
            current = lag_count;
            const auto& oracle = truncation_keeps_all(lag_count - 1, truncated.horizon, compensated)
                                     ? oracles.full()
                                     : oracles.get(lag_count);
            f_hat = oracle.cdf(x);
        }
        y[i - 1] -= f_hat;
    }
    return y;
}

CovarianceEstimate covariance_gamma(const LinearProcessModel& model, const MarginalOracle& oracle, double x, double y,
                                    std::size_t lag_horizon, std::size_t mc_draws, std::uint64_t seed) {
    if (lag_horizon == 0) throw DomainError("lag horizon must be at least 1");
    if (mc_draws < 2) throw DomainError("covariance estimate needs at least 2 draws");
    const std::size_t len = lag_horizon + 1;
    const std::size_t half = lag_horizon / 2;
    const double fx = oracle.cdf(x);
    const double fy = oracle.cdf(y);
    std::vector<double> yx(len);
    std::vector<double> yy(len);
    Sum s1;
    Sum s2;
    Sum h1;
    Sum d1;
    Sum d2;
    for (std::size_t d = 0; d < mc_draws; ++d) {
        const auto path = simulate_path(model, len, derive_seed(seed, lag_horizon, d));
        conditional_cdf(model.innovations(), path.pred, x, yx);
        conditional_cdf(model.innovations(), path.pred, y, yy);
        for (std::size_t j = 0; j < len; ++j) {
            yx[j] -= fx;
            yy[j] -= fy;
        }
        double s = yx[0] * yy[0];
        double s_half = s;
        for (std::size_t i = 1; i < len; ++i) {
            s += yx[0] * yy[i] + yy[0] * yx[i];
            if (i == half) s_half = s;
        }
        s1.add(s);
        s2.add(s * s);
        h1.add(s_half);
        const double diff = s - s_half;
        d1.add(diff);
        d2.add(diff * diff);
    }
    const double m = static_cast<double>(mc_draws);
    CovarianceEstimate out;
    out.x = x;
    out.y = y;
    out.lag_horizon = lag_horizon;
    out.mc_draws = mc_draws;
    out.gamma = s1.value() / m;
    out.gamma_half = h1.value() / m;
    const double var = std::max(0.0, (s2.value() - m * out.gamma * out.gamma) / (m - 1.0));
    out.std_error = std::sqrt(var / m);
    const double dm = d1.value() / m;
    const double dvar = std::max(0.0, (d2.value() - m * dm * dm) / (m - 1.0));
    const double dse = std::sqrt(dvar / m);
    const double gap = std::fabs(out.gamma - out.gamma_half);
    out.horizon_warning = gap >= 2.0 * std::max(out.std_error, dse) && gap > 0.0;
    if (out.horizon_warning) {
        out.warning = fmt::format("lag series not settled: truncation at {} and {} differ by {:.3g} (stderr {:.3g})",
                                  half, lag_horizon, gap, out.std_error);
    }
    return out;
}

CovarianceGrid covariance_grid(const LinearProcessModel& model, const MarginalOracle& oracle,
                               std::span<const double> points, std::size_t lag_horizon, std::size_t mc_draws,
                               std::uint64_t seed) {
    const auto d = static_cast<Eigen::Index>(points.size());
    CovarianceGrid grid;
    grid.points.assign(points.begin(), points.end());
    grid.gamma.resize(d, d);
    grid.std_error.resize(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = i; j < d; ++j) {
            auto e = covariance_gamma(model, oracle, points[static_cast<std::size_t>(i)],
                                      points[static_cast<std::size_t>(j)], lag_horizon, mc_draws, seed);
            grid.gamma(i, j) = grid.gamma(j, i) = e.gamma;
            grid.std_error(i, j) = grid.std_error(j, i) = e.std_error;
            grid.entries.push_back(std::move(e));
        }
    }
    return grid;
}

void write_covariance_csv(std::ostream& out, std::span<const CovarianceEstimate> entries) {
    fmt::print(out, "x,y,gamma,stderr,L,mc_draws\n");
    for (const auto& e : entries) {
        fmt::print(out, "{:.17g},{:.17g},{:.17g},{:.17g},{},{}\n", e.x, e.y, e.gamma, e.std_error, e.lag_horizon,
                   e.mc_draws);
    }
}

BlockingLayout make_blocking(std::size_t n, double rho) {
    if (!(rho > 0.0 && rho < 0.5)) throw DomainError(fmt::format("rho = {} outside (0, 1/2)", rho));
    // The relative nudge keeps exact powers such as 2^20^0.4 = 256 from rounding down.
    const double len = std::floor(std::pow(static_cast<double>(n), rho) * (1.0 + 1e-12));
    const auto block_len = static_cast<std::size_t>(len);
    if (block_len == 0 || n < 2 * block_len) {
        throw DomainError(fmt::format("n = {} too small for one block pair of length {}", n, block_len));
    }
    BlockingLayout layout;
    layout.n = n;
    layout.rho = rho;
    layout.block_len = block_len;
    for (std::size_t start = 0, k = 0; start < n; start += block_len, ++k) {
        layout.blocks.emplace_back(start, std::min(start + block_len, n));
        if (k % 2 == 0) ++layout.pairs;
    }
    return layout;
}

BlockSums blocked_sums(const SamplePath& truncated, const TruncatedOracleCache& oracles,
                       const BlockingLayout& layout, double x, double y) {
    if (!(x < y)) throw DomainError("blocked_sums needs x < y");
    if (layout.n != truncated.n) throw DomainError("layout length does not match the path");
    const auto yx = truncated_summands(truncated, oracles, x);
    const auto yy = truncated_summands(truncated, oracles, y);
    BlockSums out;
    Sum total;
    for (std::size_t b = 0; b < layout.blocks.size(); ++b) {
        const auto [lo, hi] = layout.blocks[b];
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += yy[i] - yx[i];
        (b % 2 == 0 ? out.u : out.v).push_back(s);
        total.add(s);
    }
    out.total = total.value();
    return out;
}

ExceedanceStats exceedance_stats(std::span<const double> totals, std::span<const double> z, std::size_t n, double x,
                                 double y) {
    if (totals.empty()) throw DomainError("no replicate totals");
    ExceedanceStats out;
    out.z.assign(z.begin(), z.end());
    const double scale = static_cast<double>(n) * (y - x) * (y - x);
    std::vector<double> z2;
    std::vector<double> lz;
    std::vector<double> lf;
    for (double t : z) {
        const auto hits = std::count_if(totals.begin(), totals.end(), [t](double v) { return std::fabs(v) > t; });
        const double f = static_cast<double>(hits) / static_cast<double>(totals.size());
        out.frequency.push_back(f);
        if (f > 0.0 && t > 0.0) {
            z2.push_back(t * t / scale);
            lz.push_back(std::log(t));
            lf.push_back(std::log(f));
        }
    }
    out.slope_vs_z2 = ls_slope(z2, lf);
    out.slope_vs_log_z = ls_slope(lz, lf);
    return out;
}

double lag1_correlation(std::span<const BlockSums> replicates) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& r : replicates) {
        for (double u : r.u) sum += u;
        count += r.u.size();
    }
    if (count == 0) throw DomainError("no block sums");
    const double mean = sum / static_cast<double>(count);
    double num = 0.0;
    double den = 0.0;
    for (const auto& r : replicates) {
        for (std::size_t k = 0; k < r.u.size(); ++k) {
            const double a = r.u[k] - mean;
            den += a * a;
            if (k + 1 < r.u.size()) num += a * (r.u[k + 1] - mean);
        }
    }
    return den > 0.0 ? num / den : 0.0;
}

GaussianLimitSampler::GaussianLimitSampler(const Eigen::MatrixXd& gamma) {
    if (gamma.rows() != gamma.cols()) throw DomainError("covariance matrix must be square");
    const Eigen::Index d = gamma.rows();
    const double scale = std::max(1.0, gamma.cwiseAbs().maxCoeff());
    if (d > 0 && (gamma - gamma.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw DomainError("covariance matrix must be symmetric");
    }
    if (d == 0) return;
    const double jitter = 1e-10 * gamma.trace() / static_cast<double>(d);
    Eigen::MatrixXd m = gamma;
    m.diagonal().array() += jitter;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    if (eig.info() != Eigen::Success) throw NumericalError("eigen-decomposition of the covariance failed");
    const auto& lambda = eig.eigenvalues();
    // Eigenvalues at rounding level of the largest one are treated as zero.
    const double floor = -64.0 * std::numeric_limits<double>::epsilon() * std::max(lambda.cwiseAbs().maxCoeff(), 0.0);
    if (lambda.minCoeff() < floor) {
        throw NumericalError(fmt::format(
            "covariance not positive semidefinite: smallest eigenvalue {:.3g} after jitter {:.3g}; the Gamma "
            "estimate is inconsistent",
            lambda.minCoeff(), jitter));
    }
    factor_ = eig.eigenvectors() * lambda.cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

std::vector<double> GaussianLimitSampler::sample(std::uint64_t seed) const {
    const Eigen::Index d = factor_.rows();
    UniformStream stream(seed);
    const auto unit = InnovationModel::normal(1.0);
    Eigen::VectorXd z(d);
    for (Eigen::Index i = 0; i < d; ++i) z(i) = unit.sample(stream);
    const Eigen::VectorXd v = factor_ * z;
    return {v.data(), v.data() + d};
}

std::vector<double> gaussian_limit_sample(const Eigen::MatrixXd& gamma, std::uint64_t seed) {
    return GaussianLimitSampler(gamma).sample(seed);
}

}  // namespace bklab
