#include "bklab/oracle.hpp"

#include <algorithm>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <fmt/format.h>
#include <numbers>
#include <numeric>

#include "bklab/errors.hpp"
#include "bklab/kernels.hpp"

namespace bklab {
namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779399461;

void require_open_unit(double y) {
    if (!(y > 0.0 && y < 1.0)) throw DomainError(fmt::format("quantile level {} outside (0, 1)", y));
}

double std_normal_quantile(double y) { return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * y); }

// Draws of sum_{k=1}^{weights.size()} weights[k-1] * eps_k, plus an
// independent N(0, extra_var) term when extra_var > 0.
std::vector<double> draw_predictors(const InnovationModel& innovations, std::span<const double> weights,
                                    double extra_var, std::size_t count, std::uint64_t seed) {
    std::vector<double> points(count, 0.0);
    if (weights.empty() && extra_var == 0.0) return points;
    UniformStream stream(seed);
    std::vector<double> eps(weights.size());
    const double extra_sd = std::sqrt(extra_var);
    for (auto& p : points) {
        for (auto& e : eps) e = innovations.sample(stream);
        double s = weights.empty() ? 0.0 : kernels::dot(weights, eps);
        if (extra_var > 0.0) s += extra_sd * std_normal_quantile(stream.next());
        p = s;
    }
    return points;
}

}  // namespace

double MarginalOracle::innovation_cdf_mean(double x) const {
    switch (innovations_.family()) {
        case InnovationFamily::Normal:
            return kernels::normal_cdf_mean(x, points_, innovations_.scale());
        case InnovationFamily::Logistic:
            return kernels::logistic_cdf_mean(x, points_, innovations_.scale());
        default: {
            double acc = 0.0;
            for (double s : points_) acc += innovations_.cdf(x - s);
            return acc / static_cast<double>(points_.size());
        }
    }
}

double MarginalOracle::innovation_pdf_mean(double x) const {
    switch (innovations_.family()) {
        case InnovationFamily::Normal:
            return kernels::normal_pdf_mean(x, points_, innovations_.scale());
        case InnovationFamily::Logistic:
            return kernels::logistic_pdf_mean(x, points_, innovations_.scale());
        default: {
            double acc = 0.0;
            for (double s : points_) acc += innovations_.pdf(x - s);
            return acc / static_cast<double>(points_.size());
        }
    }
}

double MarginalOracle::mixture_cdf(double x) const {
    if (points_.empty()) throw StateError("oracle was built without mixture points");
    return innovation_cdf_mean(x);
}

double MarginalOracle::mixture_pdf(double x) const {
    if (points_.empty()) throw StateError("oracle was built without mixture points");
    return innovation_pdf_mean(x);
}

double MarginalOracle::mixture_quantile(double y, std::optional<double> hint) const {
    require_open_unit(y);
    if (points_.empty()) throw StateError("oracle was built without mixture points");
    // F_eps(x - max s) <= F(x) <= F_eps(x - min s) brackets the root.
    const double qe = innovations_.quantile(y);
    double lo = point_min_ + qe;
    double hi = point_max_ + qe;
    double width = std::max(hi - lo, 1e-300);
    for (int k = 0; k < 64 && mixture_cdf(lo) > y; ++k, width *= 2.0) lo -= width;
    width = std::max(hi - lo, 1e-300);
    for (int k = 0; k < 64 && mixture_cdf(hi) < y; ++k, width *= 2.0) hi += width;

    double x = hint.value_or(0.5 * (lo + hi));
    if (!(x >= lo && x <= hi)) x = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
        const double r = mixture_cdf(x) - y;
        if (std::fabs(r) <= kRootTolerance) return x;
        if (r > 0.0) {
            hi = x;
        } else {
            lo = x;
        }
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::fabs(x))) return x;
        const double d = mixture_pdf(x);
        double next = d > 0.0 ? x - r / d : lo - 1.0;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        x = next;
    }
    throw NumericalError(fmt::format("mixture quantile root search did not converge at y = {}", y));
}

double MarginalOracle::closed_form_cdf(double x) const {
    switch (exact_) {
        case Exact::Gaussian:
            return 0.5 * std::erfc(-(x / gaussian_sd_) * std::numbers::sqrt2 / 2.0);
        case Exact::Innovation:
            return innovations_.cdf(x);
        case Exact::None:
            break;
    }
    throw StateError("oracle has no closed form");
}

double MarginalOracle::closed_form_pdf(double x) const {
    switch (exact_) {
        case Exact::Gaussian: {
            const double z = x / gaussian_sd_;
            return kInvSqrt2Pi * std::exp(-0.5 * z * z) / gaussian_sd_;
        }
        case Exact::Innovation:
            return innovations_.pdf(x);
        case Exact::None:
            break;
    }
    throw StateError("oracle has no closed form");
}

double MarginalOracle::closed_form_quantile(double y) const {
    require_open_unit(y);
    switch (exact_) {
        case Exact::Gaussian:
            return gaussian_sd_ * std_normal_quantile(y);
        case Exact::Innovation:
            return innovations_.quantile(y);
        case Exact::None:
            break;
    }
    throw StateError("oracle has no closed form");
}

double MarginalOracle::cdf(double x) const { return exact() ? closed_form_cdf(x) : mixture_cdf(x); }

double MarginalOracle::pdf(double x) const { return exact() ? closed_form_pdf(x) : mixture_pdf(x); }

double MarginalOracle::quantile(double y) const {
    return exact() ? closed_form_quantile(y) : mixture_quantile(y);
}

MarginalOracle::QuantileDensity MarginalOracle::quantile_density(double y) const {
    require_open_unit(y);
    if (exact_kind() == Exact::Gaussian) {
        const double z = std_normal_quantile(y);
        return {gaussian_sd_ * z, kInvSqrt2Pi * std::exp(-0.5 * z * z) / gaussian_sd_};
    }
    const double q = quantile(y);
    return {q, pdf(q)};
}

MarginalOracle::QuantileDensity MarginalOracle::quantile_density(double y, double hint) const {
    if (exact()) return quantile_density(y);
    const double q = mixture_quantile(y, hint);
    return {q, mixture_pdf(q)};
}

void MarginalOracle::cdf_batch(std::span<const double> in, std::span<double> out) const {
    if (in.size() != out.size()) throw DomainError("cdf_batch size mismatch");
    const Exact kind = exact_kind();
    if (kind == Exact::Gaussian) {
        kernels::normal_cdf(in, out, 0.0, gaussian_sd_);
        return;
    }
    if (kind == Exact::Innovation && innovations_.family() == InnovationFamily::Normal) {
        kernels::normal_cdf(in, out, 0.0, innovations_.scale());
        return;
    }
    if (kind == Exact::Innovation && innovations_.family() == InnovationFamily::Logistic) {
        kernels::logistic_cdf(in, out, 0.0, innovations_.scale());
        return;
    }
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = cdf(in[i]);
}

MarginalOracle build_marginal_oracle(const LinearProcessModel& model, std::size_t mixture_points,
                                     std::uint64_t seed, bool prefer_exact) {
    MarginalOracle oracle(model.innovations());
    oracle.seed_ = seed;
    oracle.use_exact_ = prefer_exact;
    if (mixture_points < 1000) {
        oracle.warnings_.push_back(fmt::format(
            "only {} mixture points; the Monte Carlo error of F is about {:.2g}", mixture_points,
            mixture_points ? 1.0 / std::sqrt(static_cast<double>(mixture_points)) : 1.0));
    }
    if (mixture_points == 0) {
        throw DomainError("marginal oracle needs at least one mixture point");
    }
    const std::size_t horizon = model.horizon();
    const auto& c = model.coefficients();
    std::vector<double> weights = c.head(horizon + 1);
    weights.erase(weights.begin());
    double extra_var = 0.0;
    if (model.gaussian()) extra_var = model.innovations().variance() * c.tail_sq(horizon + 1);
    oracle.points_ = draw_predictors(model.innovations(), weights, extra_var, mixture_points, seed);
    const auto [mn, mx] = std::minmax_element(oracle.points_.begin(), oracle.points_.end());
    oracle.point_min_ = *mn;
    oracle.point_max_ = *mx;

    if (model.iid()) {
        oracle.exact_ = MarginalOracle::Exact::Innovation;
    } else if (model.gaussian()) {
        oracle.exact_ = MarginalOracle::Exact::Gaussian;
        oracle.gaussian_sd_ = model.marginal_sd();
    }
    return oracle;
}

MarginalOracle build_truncated_oracle(const LinearProcessModel& model, std::size_t lag_count,
                                      std::size_t mixture_points, std::uint64_t seed, bool prefer_exact) {
    if (lag_count == 0) throw DomainError("truncated oracle needs lag_count >= 1");
    if (mixture_points == 0) throw DomainError("marginal oracle needs at least one mixture point");
    MarginalOracle oracle(model.innovations());
    oracle.seed_ = seed;
    oracle.use_exact_ = prefer_exact;
    std::vector<double> weights = model.coefficients().head(lag_count);
    weights.erase(weights.begin());
    // Trailing zeros do not change the law; drop them so finite memories
    // shorter than lag_count stay exact.
    while (!weights.empty() && weights.back() == 0.0) weights.pop_back();
    oracle.points_ = draw_predictors(model.innovations(), weights, 0.0, mixture_points, seed);
    const auto [mn, mx] = std::minmax_element(oracle.points_.begin(), oracle.points_.end());
    oracle.point_min_ = *mn;
    oracle.point_max_ = *mx;
    if (weights.empty()) {
        oracle.exact_ = MarginalOracle::Exact::Innovation;
    } else if (model.gaussian()) {
        double sum_sq = 1.0;
        for (double w : weights) sum_sq += w * w;
        oracle.exact_ = MarginalOracle::Exact::Gaussian;
        oracle.gaussian_sd_ = std::sqrt(model.innovations().variance() * sum_sq);
    }
    return oracle;
}

CsrExponents csr_exponents(const MarginalOracle& oracle) {
    constexpr int kPoints = 31;
    std::vector<double> lx(kPoints);
    std::vector<double> l1(kPoints);
    std::vector<double> l2(kPoints);
    for (int k = 0; k < kPoints; ++k) {
        const double ly = std::log(1e-5) + (std::log(1e-2) - std::log(1e-5)) * k / (kPoints - 1);
        const double y = std::exp(ly);
        const double f1 = oracle.quantile_density(y).density;
        const double f2 = oracle.quantile_density(1.0 - y).density;
        if (!(f1 > 0.0) || !(f2 > 0.0)) {
            throw NumericalError(fmt::format("f(Q(y)) not positive near y = {}; tail exponents undefined", y));
        }
        lx[k] = ly;
        l1[k] = std::log(f1);
        l2[k] = std::log(f2);
    }
    auto fit = [&](const std::vector<double>& ys, double& slope, double& rms) {
        const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / kPoints;
        const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / kPoints;
        double sxy = 0.0;
        double sxx = 0.0;
        for (int k = 0; k < kPoints; ++k) {
            sxy += (lx[k] - mx) * (ys[k] - my);
            sxx += (lx[k] - mx) * (lx[k] - mx);
        }
        slope = sxy / sxx;
        double ss = 0.0;
        for (int k = 0; k < kPoints; ++k) {
            const double r = ys[k] - my - slope * (lx[k] - mx);
            ss += r * r;
        }
        rms = std::sqrt(ss / kPoints);
    };
    CsrExponents out;
    fit(l1, out.gamma1, out.residual1);
    fit(l2, out.gamma2, out.residual2);
    return out;
}

}  // namespace bklab
