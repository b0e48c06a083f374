#include "bklab/coefficients.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>
#include <fmt/format.h>
#include <numbers>

#include "bklab/errors.hpp"

namespace bklab {
namespace {

double power_weight(double tau, double k) {
    return std::pow(1.0 + k, -tau) * std::pow(std::log(std::numbers::e + k), -1.5);
}

// integral_{from}^{inf} (1 + k)^-a * log(e + k)^-b dk, evaluated in v = log(1 + k).
double power_integral(double a, double b, double from) {
    const double v0 = std::log1p(from);
    auto integrand = [a, b, v0](double w) {
        const double v = v0 + w;
        const double k = std::expm1(v);
        return std::exp((1.0 - a) * v) * std::pow(std::log(std::numbers::e + k), -b);
    };
    boost::math::quadrature::exp_sinh<double> integrator;
    return integrator.integrate(integrand);
}

}  // namespace

CoefficientSequence::CoefficientSequence(CoefficientKind kind, double param, std::vector<double> finite)
    : kind_(kind), param_(param), finite_(std::move(finite)) {}

CoefficientSequence CoefficientSequence::power_law(double tau) {
    if (!(tau > 2.5) || !std::isfinite(tau)) {
        throw ConditionError(fmt::format(
            "power-law coefficients with tau = {} violate admissibility: the tail condition on "
            "sum_(k>=i) c_k^2 is fulfilled only for tau > 5/2",
            tau));
    }
    CoefficientSequence seq(CoefficientKind::PowerLaw, tau, {});
    auto tails = std::make_shared<std::vector<double>>(kTailTable + 1);
    (*tails)[kTailTable] = seq.power_tail_integral(static_cast<double>(kTailTable) - 0.5);
    double abs_sum = power_integral(tau, 1.5, static_cast<double>(kTailTable) - 0.5);
    for (std::size_t k = kTailTable; k-- > 1;) {
        const double c = power_weight(tau, static_cast<double>(k));
        (*tails)[k] = (*tails)[k + 1] + c * c;
        abs_sum += c;
    }
    (*tails)[0] = (*tails)[1] + 1.0;
    seq.abs_sum_ = abs_sum + 1.0;
    seq.tails_ = std::move(tails);
    return seq;
}

CoefficientSequence CoefficientSequence::geometric(double r) {
    if (!(std::fabs(r) < 1.0)) throw DomainError("geometric coefficients require |r| < 1");
    CoefficientSequence seq(CoefficientKind::Geometric, r, {});
    seq.abs_sum_ = 1.0 / (1.0 - std::fabs(r));
    return seq;
}

CoefficientSequence CoefficientSequence::finite(std::vector<double> values) {
    if (values.empty() || values.front() != 1.0) {
        throw DomainError("finite coefficients must start with c_0 = 1");
    }
    for (double v : values) {
        if (!std::isfinite(v)) throw DomainError("finite coefficients must be finite numbers");
    }
    while (values.size() > 1 && values.back() == 0.0) values.pop_back();
    auto tails = std::make_shared<std::vector<double>>(values.size() + 1, 0.0);
    double abs_sum = 0.0;
    for (std::size_t k = values.size(); k-- > 0;) {
        (*tails)[k] = (*tails)[k + 1] + values[k] * values[k];
        abs_sum += std::fabs(values[k]);
    }
    CoefficientSequence seq(CoefficientKind::Finite, 0.0, std::move(values));
    seq.tails_ = std::move(tails);
    seq.abs_sum_ = abs_sum;
    return seq;
}

std::string CoefficientSequence::describe() const {
    switch (kind_) {
        case CoefficientKind::PowerLaw:
            return fmt::format("power_law(tau={})", param_);
        case CoefficientKind::Geometric:
            return fmt::format("geometric(r={})", param_);
        case CoefficientKind::Finite:
            return fmt::format("finite([{}])", fmt::join(finite_, ", "));
    }
    return "unknown";
}

double CoefficientSequence::eval(std::size_t k) const {
    if (k == 0) return 1.0;
    switch (kind_) {
        case CoefficientKind::PowerLaw:
            return power_weight(param_, static_cast<double>(k));
        case CoefficientKind::Geometric:
            return std::pow(param_, static_cast<double>(k));
        case CoefficientKind::Finite:
            return k < finite_.size() ? finite_[k] : 0.0;
    }
    return 0.0;
}

double CoefficientSequence::power_tail_integral(double from) const {
    return power_integral(2.0 * param_, 3.0, from);
}

double CoefficientSequence::tail_sq(std::size_t i) const {
    switch (kind_) {
        case CoefficientKind::PowerLaw:
            if (i <= kTailTable) return (*tails_)[i];
            return power_tail_integral(static_cast<double>(i) - 0.5);
        case CoefficientKind::Geometric: {
            const double r2 = param_ * param_;
            return std::pow(r2, static_cast<double>(i)) / (1.0 - r2);
        }
        case CoefficientKind::Finite:
            return i < tails_->size() ? (*tails_)[i] : 0.0;
    }
    return 0.0;
}

bool CoefficientSequence::trivial() const {
    switch (kind_) {
        case CoefficientKind::PowerLaw:
            return false;
        case CoefficientKind::Geometric:
            return param_ == 0.0;
        case CoefficientKind::Finite:
            return finite_.size() == 1;
    }
    return false;
}

std::vector<double> CoefficientSequence::head(std::size_t count) const {
    std::vector<double> out(count);
    for (std::size_t k = 0; k < count; ++k) out[k] = eval(k);
    return out;
}

}  // namespace bklab
