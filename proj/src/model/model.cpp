#include "bklab/model.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numeric>
#include <vector>

#include "bklab/errors.hpp"

namespace bklab {
namespace {

void require_rho(double rho) {
    if (!(rho > 0.0 && rho < 0.5)) {
        throw DomainError(fmt::format("rho = {} outside the open interval (0, 1/2)", rho));
    }
}

double power_law_rho_min(double tau) { return 2.0 / (2.0 * tau - 1.0); }

}  // namespace

std::size_t truncation_horizon(const CoefficientSequence& c, double tol, std::size_t max_horizon) {
    if (!(tol > 0.0)) throw DomainError("truncation tolerance must be positive");
    const double tol2 = tol * tol;
    if (c.tail_sq(1) <= tol2) return 0;
    std::size_t hi = 1;
    while (c.tail_sq(hi + 1) > tol2) {
        if (hi >= max_horizon) {
            throw ModelError(fmt::format("coefficient tail of {} does not fall below {} within {} lags",
                                         c.describe(), tol, max_horizon));
        }
        hi *= 2;
    }
    std::size_t lo = hi / 2;  // tail_sq(lo + 1) > tol2
    while (hi - lo > 1) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (c.tail_sq(mid + 1) <= tol2) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

LinearProcessModel::LinearProcessModel(InnovationModel innovations, CoefficientSequence coefficients,
                                       double rho, std::optional<double> gamma1,
                                       std::optional<double> gamma2, double trunc_tol_rel)
    : innovations_(std::move(innovations)),
      coefficients_(std::move(coefficients)),
      rho_(rho),
      gamma1_(gamma1),
      gamma2_(gamma2),
      trunc_tol_rel_(trunc_tol_rel),
      horizon_(0) {}

LinearProcessModel LinearProcessModel::create(InnovationModel innovations, CoefficientSequence coefficients,
                                              double rho, std::optional<double> gamma1,
                                              std::optional<double> gamma2, double trunc_tol_rel) {
    require_rho(rho);
    if (coefficients.kind() == CoefficientKind::PowerLaw && rho < power_law_rho_min(coefficients.tau())) {
        throw ConditionError(fmt::format(
            "rho = {} too small for {}: the tail condition needs rho >= 2/(2 tau - 1) = {}", rho,
            coefficients.describe(), power_law_rho_min(coefficients.tau())));
    }
    if (!(trunc_tol_rel > 0.0)) throw DomainError("trunc_tol must be positive");
    LinearProcessModel model(std::move(innovations), std::move(coefficients), rho, gamma1, gamma2,
                             trunc_tol_rel);
    model.horizon_ = truncation_horizon(model.coefficients_, model.trunc_tol());
    return model;
}

double LinearProcessModel::trunc_tol() const { return trunc_tol_rel_ * std::sqrt(coefficients_.sum_sq()); }

std::size_t LinearProcessModel::horizon() const { return horizon_; }

double LinearProcessModel::marginal_sd() const {
    return std::sqrt(innovations_.variance() * coefficients_.sum_sq());
}

std::string LinearProcessModel::id() const {
    return fmt::format("{}(scale={})/{}/rho={}", innovations_.name(), innovations_.scale(),
                       coefficients_.describe(), rho_);
}

AdmissibilityReport check_dependence_condition(const CoefficientSequence& coefficients, double rho) {
    require_rho(rho);
    AdmissibilityReport report;
    report.rho = rho;
    constexpr int kMinExp = 1;
    constexpr int kMaxExp = 40;
    report.i_min = std::size_t{1} << kMinExp;
    report.i_max = std::size_t{1} << kMaxExp;

    std::vector<double> log_i;
    std::vector<double> log_g;
    double last = 0.0;
    for (int j = kMinExp; j <= kMaxExp; ++j) {
        const double i = std::ldexp(1.0, j);
        const double li = std::log(i);
        const double g = coefficients.tail_sq(static_cast<std::size_t>(i)) * std::pow(i, 2.0 / rho) * li * li * li;
        report.sup_scaled = std::max(report.sup_scaled, g);
        last = g;
        if (j >= (kMinExp + kMaxExp) / 2 && g > 0.0 && std::isfinite(g)) {
            log_i.push_back(li);
            log_g.push_back(std::log(g));
        }
    }
    if (log_i.size() >= 2) {
        const double mx = std::accumulate(log_i.begin(), log_i.end(), 0.0) / static_cast<double>(log_i.size());
        const double my = std::accumulate(log_g.begin(), log_g.end(), 0.0) / static_cast<double>(log_g.size());
        double sxy = 0.0;
        double sxx = 0.0;
        for (std::size_t k = 0; k < log_i.size(); ++k) {
            sxy += (log_i[k] - mx) * (log_g[k] - my);
            sxx += (log_i[k] - mx) * (log_i[k] - mx);
        }
        report.tail_slope = sxy / sxx;
    }
    constexpr double kSlopeTolerance = 0.05;
    report.bounded = std::isfinite(report.sup_scaled) && (last == 0.0 || report.tail_slope <= kSlopeTolerance);

    if (coefficients.kind() == CoefficientKind::PowerLaw) {
        const double tau = coefficients.tau();
        const double lo = power_law_rho_min(tau);
        report.admissible_rho = std::make_pair(lo, 0.5);
        report.analytic_admissible = tau > 2.5 && rho >= lo;
        report.admissible = *report.analytic_admissible;
        report.message = report.admissible
                             ? fmt::format("admissible: rho = {} lies in [{}, 1/2)", rho, lo)
                             : fmt::format("not admissible: rho = {} below 2/(2 tau - 1) = {}", rho, lo);
    } else {
        report.admissible = report.bounded;
        report.message = report.admissible
                             ? fmt::format("admissible: scaled tail bounded (sup {:.6g}, slope {:.3g})",
                                           report.sup_scaled, report.tail_slope)
                             : fmt::format("not admissible: scaled tail diverges (slope {:.3g})", report.tail_slope);
    }
    return report;
}

SmoothnessGrid default_smoothness_grid(const InnovationModel& innovations) {
    SmoothnessGrid grid;
    grid.lower = innovations.quantile(5e-9);
    grid.upper = innovations.quantile(1.0 - 5e-9);
    grid.step = 1e-3 * innovations.scale();
    return grid;
}

SmoothnessReport validate_innovation(const InnovationModel& innovations) {
    return validate_innovation(innovations, default_smoothness_grid(innovations));
}

SmoothnessReport validate_innovation(const InnovationModel& innovations, const SmoothnessGrid& grid) {
    if (!(grid.step > 0.0) || !(grid.upper > grid.lower)) {
        throw DomainError("smoothness grid needs lower < upper and a positive step");
    }
    SmoothnessReport report;
    report.moments_ok = innovations.moment_order() > 2.0;
    const double h = grid.step;
    const auto j0 = static_cast<long long>(std::floor(grid.lower / h));
    const auto j1 = static_cast<long long>(std::ceil(grid.upper / h));

    std::vector<double> d1_err;
    std::vector<double> d2_err;
    std::vector<double> xs;
    for (long long j = j0; j <= j1; ++j) {
        const double x = static_cast<double>(j) * h;
        const double f = innovations.pdf(x);
        const double d1 = innovations.pdf_deriv(x);
        const double d2 = innovations.pdf_deriv2(x);
        report.sup_pdf = std::max(report.sup_pdf, f);
        report.sup_abs_deriv = std::max(report.sup_abs_deriv, std::fabs(d1));
        report.sup_abs_deriv2 = std::max(report.sup_abs_deriv2, std::fabs(d2));
        const double fd1 = (innovations.pdf(x + h) - innovations.pdf(x - h)) / (2.0 * h);
        const double fd2 = (innovations.pdf_deriv(x + h) - innovations.pdf_deriv(x - h)) / (2.0 * h);
        xs.push_back(x);
        d1_err.push_back(std::fabs(fd1 - d1));
        d2_err.push_back(std::fabs(fd2 - d2));
    }
    report.grid_points = xs.size();
    // Mismatch tolerance 1e-3 in units of the derivative's own magnitude (at least 1).
    const double tol1 = 1e-3 * std::max(1.0, report.sup_abs_deriv);
    const double tol2 = 1e-3 * std::max(1.0, report.sup_abs_deriv2);
    double worst = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        report.max_deriv_mismatch = std::max(report.max_deriv_mismatch, d1_err[k]);
        report.max_deriv2_mismatch = std::max(report.max_deriv2_mismatch, d2_err[k]);
        const double excess = std::max(d1_err[k] / tol1, d2_err[k] / tol2);
        if (excess > 1.0 && excess > worst) {
            worst = excess;
            report.violation = true;
            report.violation_at = xs[k];
        }
    }
    return report;
}

}  // namespace bklab
