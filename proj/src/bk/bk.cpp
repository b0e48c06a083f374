#include "bklab/bk.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <limits>
#include <ostream>

#include "bklab/errors.hpp"

namespace bklab {
namespace {

void require_rate_domain(double n) {
    if (!(n >= 16.0)) throw DomainError(fmt::format("rate normalizers need n >= 16, got {}", n));
}

struct SweepResult {
    double sup_abs = 0.0;
    double weighted_sup = 0.0;
};

// Evaluates R_n on an ascending grid with a merge pointer for E_n.
SweepResult sweep(const EmpiricalSummary& s, const EmpiricalSummary& pit, const MarginalOracle& oracle,
                  std::span<const double> grid, std::optional<double> nu, double density_floor,
                  ResidualSeries* keep) {
    const std::size_t n = s.n;
    const double nn = static_cast<double>(n);
    const double rn = std::sqrt(nn);
    SweepResult out;
    std::size_t below = 0;  // #{U_i <= y}
    double hint = std::numeric_limits<double>::quiet_NaN();
    for (double y : grid) {
        while (below < n && pit.sorted[below] <= y) ++below;
        const auto qd = std::isnan(hint) ? oracle.quantile_density(y) : oracle.quantile_density(y, hint);
        hint = qd.quantile;
        if (!(qd.density >= density_floor)) {
            throw ConditionError(fmt::format(
                "density f(Q(y)) = {:.3g} at y = {} is below {:.0e}; the working interval must keep the "
                "density bounded away from zero",
                qd.density, y, density_floor));
        }
        const double qn = s.sorted[equantile_rank(n, y) - 1];
        const double r = qd.density * (rn * (qd.quantile - qn)) - rn * (static_cast<double>(below) / nn - y);
        const double h = nu ? std::pow(y * (1.0 - y), *nu) : 1.0;
        out.sup_abs = std::max(out.sup_abs, std::fabs(r));
        out.weighted_sup = std::max(out.weighted_sup, h * std::fabs(r));
        if (keep) {
            keep->y_grid.push_back(y);
            keep->values.push_back(r);
            keep->weights.push_back(h);
        }
    }
    return out;
}

std::vector<double> uniform_points(double a, double b, std::size_t count) {
    std::vector<double> g;
    g.reserve(count);
    for (std::size_t j = 1; j <= count; ++j) {
        const double y = a + (b - a) * static_cast<double>(j) / static_cast<double>(count + 1);
        if (y > a && y < b) g.push_back(y);
    }
    return g;
}

ResidualSeries residual_series(const EmpiricalSummary& s, const EmpiricalSummary& pit, const MarginalOracle& oracle,
                               double a, double b, std::size_t refine, std::optional<double> nu,
                               double density_floor, const ResidualOptions& options) {
    if (s.n == 0 || s.n != pit.n) throw DomainError("sample and PIT sample must be nonempty and of equal size");
    ResidualSeries series;
    series.nu = nu;
    series.interval = {a, b};
    series.n = s.n;
    series.seed = s.source_seed;
    series.refine = refine;
    const auto grid = jump_grid(pit, a, b, refine);
    series.grid_size = grid.size();
    if (options.keep_series) {
        series.y_grid.reserve(grid.size());
        series.values.reserve(grid.size());
        series.weights.reserve(grid.size());
    }
    const auto r = sweep(s, pit, oracle, grid, nu, density_floor, options.keep_series ? &series : nullptr);
    series.sup_abs = r.sup_abs;
    series.weighted_sup = nu ? r.weighted_sup : std::numeric_limits<double>::quiet_NaN();
    if (options.refinement_check) {
        const auto extra = uniform_points(a, b, 2 * refine);
        const auto e = sweep(s, pit, oracle, extra, nu, density_floor, nullptr);
        series.sup_abs_doubled = std::max(series.sup_abs, e.sup_abs);
    }
    return series;
}

}  // namespace

double rate_b(double n) {
    require_rate_domain(n);
    const double l = std::log(n);
    return std::pow(n, -0.25) * std::sqrt(l) * std::pow(std::log(l), 0.25);
}

double rate_lambda(double n) {
    require_rate_domain(n);
    return std::sqrt(2.0 * std::log(std::log(n)) / n);
}

double rate_kiefer_pointwise(double n) {
    require_rate_domain(n);
    return std::pow(n, -0.25) * std::pow(std::log(std::log(n)), 0.75);
}

double csr_nu_min(double gamma) {
    if (!(gamma >= 1.0)) throw DomainError(fmt::format("weight threshold defined for gamma >= 1, got {}", gamma));
    return std::max(2.0 * gamma, 3.0 * gamma - 2.0);
}

double residual_pointwise(const EmpiricalSummary& s, const EmpiricalSummary& pit, const MarginalOracle& oracle,
                          double y) {
    const auto qd = oracle.quantile_density(y);
    if (!(qd.density > 0.0)) {
        throw ConditionError(fmt::format("degenerate density f(Q(y)) = 0 at y = {}", y));
    }
    return qd.density * q_process(s, oracle, y) - alpha_process(pit, y);
}

ResidualSeries residual_sup(const EmpiricalSummary& s, const EmpiricalSummary& pit, const MarginalOracle& oracle,
                            double a, double b, std::size_t refine, std::optional<double> nu,
                            const ResidualOptions& options) {
    return residual_series(s, pit, oracle, a, b, refine, nu, kDensityFloor, options);
}

ResidualSeries weighted_residual_sup(const EmpiricalSummary& s, const EmpiricalSummary& pit,
                                     const MarginalOracle& oracle, double nu, double gamma, std::size_t refine,
                                     const ResidualOptions& options) {
    const double nu_min = csr_nu_min(gamma);
    if (!(nu > nu_min)) {
        throw ConditionError(fmt::format(
            "weight exponent nu = {} must exceed max(2 gamma, 3 gamma - 2) = {} for gamma = {}", nu, nu_min, gamma));
    }
    const double nn = static_cast<double>(s.n);
    return residual_series(s, pit, oracle, 1.0 / (nn + 1.0), nn / (nn + 1.0), refine, nu,
                           std::numeric_limits<double>::min(), options);
}

void write_residual_csv(std::ostream& out, const ResidualSeries& series) {
    if (series.y_grid.size() != series.values.size()) throw StateError("residual series was not kept");
    fmt::print(out, "# n: {}\n# seed: {}\n# interval: {:.17g},{:.17g}\n# nu: {}\n", series.n, series.seed,
               series.interval.first, series.interval.second,
               series.nu ? fmt::format("{:.17g}", *series.nu) : std::string("none"));
    fmt::print(out, "y,residual,weight,weighted_abs\n");
    for (std::size_t i = 0; i < series.y_grid.size(); ++i) {
        fmt::print(out, "{:.17g},{:.17g},{:.17g},{:.17g}\n", series.y_grid[i], series.values[i], series.weights[i],
                   series.weights[i] * std::fabs(series.values[i]));
    }
}

}  // namespace bklab
