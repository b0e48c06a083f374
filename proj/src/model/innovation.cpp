#include "bklab/innovation.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <numbers>

#include "bklab/errors.hpp"

namespace bklab {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kInvSqrt2Pi = 0.3989422804014326779399461;

void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw DomainError(std::string("innovation parameter '") + what + "' must be positive and finite");
    }
}

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

InnovationModel::InnovationModel(InnovationFamily family, std::string name, double location, double scale,
                                 double dof, double moment_order, bool smooth)
    : family_(family),
      name_(std::move(name)),
      location_(location),
      scale_(scale),
      dof_(dof),
      moment_order_(moment_order),
      smooth_(smooth) {}

InnovationModel InnovationModel::normal(double scale) {
    require_positive(scale, "scale");
    return {InnovationFamily::Normal, "normal", 0.0, scale, 0.0, kInf, true};
}

InnovationModel InnovationModel::logistic(double scale) {
    require_positive(scale, "scale");
    return {InnovationFamily::Logistic, "logistic", 0.0, scale, 0.0, kInf, true};
}

InnovationModel InnovationModel::laplace(double scale) {
    require_positive(scale, "scale");
    return {InnovationFamily::Laplace, "laplace", 0.0, scale, 0.0, kInf, false};
}

InnovationModel InnovationModel::uniform(double lower, double upper) {
    if (!(upper > lower) || !std::isfinite(lower) || !std::isfinite(upper)) {
        throw DomainError("uniform innovation requires finite lower < upper");
    }
    return {InnovationFamily::Uniform, "uniform", lower, upper - lower, 0.0, kInf, false};
}

InnovationModel InnovationModel::exponential(double rate) {
    require_positive(rate, "rate");
    return {InnovationFamily::Exponential, "exponential", 0.0, 1.0 / rate, 0.0, kInf, false};
}

InnovationModel InnovationModel::student_t(double dof, double scale) {
    require_positive(dof, "dof");
    require_positive(scale, "scale");
    return {InnovationFamily::StudentT, "student_t", 0.0, scale, dof, dof, true};
}

double InnovationModel::cdf(double x) const {
    const double z = (x - location_) / scale_;
    switch (family_) {
        case InnovationFamily::Normal:
            return 0.5 * std::erfc(-z * std::numbers::sqrt2 / 2.0);
        case InnovationFamily::Logistic: {
            const double e = std::exp(-std::fabs(z));
            return z >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
        }
        case InnovationFamily::Laplace:
            return z < 0.0 ? 0.5 * std::exp(z) : 1.0 - 0.5 * std::exp(-z);
        case InnovationFamily::Uniform:
            return z <= 0.0 ? 0.0 : (z >= 1.0 ? 1.0 : z);
        case InnovationFamily::Exponential:
            return z <= 0.0 ? 0.0 : -std::expm1(-z);
        case InnovationFamily::StudentT:
            return boost::math::cdf(boost::math::students_t_distribution<double>(dof_), z);
    }
    return 0.0;
}

double InnovationModel::pdf(double x) const {
    const double z = (x - location_) / scale_;
    double g = 0.0;
    switch (family_) {
        case InnovationFamily::Normal:
            g = kInvSqrt2Pi * std::exp(-0.5 * z * z);
            break;
        case InnovationFamily::Logistic: {
            const double e = std::exp(-std::fabs(z));
            g = e / ((1.0 + e) * (1.0 + e));
            break;
        }
        case InnovationFamily::Laplace:
            g = 0.5 * std::exp(-std::fabs(z));
            break;
        case InnovationFamily::Uniform:
            g = (z >= 0.0 && z <= 1.0) ? 1.0 : 0.0;
            break;
        case InnovationFamily::Exponential:
            g = z >= 0.0 ? std::exp(-z) : 0.0;
            break;
        case InnovationFamily::StudentT:
            g = boost::math::pdf(boost::math::students_t_distribution<double>(dof_), z);
            break;
    }
    return g / scale_;
}

double InnovationModel::pdf_deriv(double x) const {
    const double z = (x - location_) / scale_;
    const double f = pdf(x);
    double ratio = 0.0;  // d/dz log g(z)
    switch (family_) {
        case InnovationFamily::Normal:
            ratio = -z;
            break;
        case InnovationFamily::Logistic:
            ratio = -std::tanh(0.5 * z);
            break;
        case InnovationFamily::Laplace:
            ratio = -sign(z);
            break;
        case InnovationFamily::Uniform:
            ratio = 0.0;
            break;
        case InnovationFamily::Exponential:
            ratio = z >= 0.0 ? -1.0 : 0.0;
            break;
        case InnovationFamily::StudentT:
            ratio = -(dof_ + 1.0) * z / (dof_ + z * z);
            break;
    }
    return f * ratio / scale_;
}

double InnovationModel::pdf_deriv2(double x) const {
    const double z = (x - location_) / scale_;
    const double f = pdf(x);
    double factor = 0.0;  // g''(z) / g(z)
    switch (family_) {
        case InnovationFamily::Normal:
            factor = z * z - 1.0;
            break;
        case InnovationFamily::Logistic: {
            const double t = std::tanh(0.5 * z);
            factor = t * t - 0.5 * (1.0 - t * t);
            break;
        }
        case InnovationFamily::Laplace:
            factor = z == 0.0 ? 0.0 : 1.0;
            break;
        case InnovationFamily::Uniform:
            factor = 0.0;
            break;
        case InnovationFamily::Exponential:
            factor = z >= 0.0 ? 1.0 : 0.0;
            break;
        case InnovationFamily::StudentT: {
            const double v = dof_;
            const double r = -(v + 1.0) * z / (v + z * z);
            const double dr = -(v + 1.0) * (v - z * z) / ((v + z * z) * (v + z * z));
            factor = r * r + dr;
            break;
        }
    }
    return f * factor / (scale_ * scale_);
}

double InnovationModel::quantile(double p) const {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("innovation quantile requires p in (0, 1)");
    double z = 0.0;
    switch (family_) {
        case InnovationFamily::Normal:
            z = -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
            break;
        case InnovationFamily::Logistic:
            z = std::log(p) - std::log1p(-p);
            break;
        case InnovationFamily::Laplace:
            z = p < 0.5 ? std::log(2.0 * p) : -std::log(2.0 * (1.0 - p));
            break;
        case InnovationFamily::Uniform:
            z = p;
            break;
        case InnovationFamily::Exponential:
            z = -std::log1p(-p);
            break;
        case InnovationFamily::StudentT:
            z = boost::math::quantile(boost::math::students_t_distribution<double>(dof_), p);
            break;
    }
    return location_ + scale_ * z;
}

double InnovationModel::mean() const {
    switch (family_) {
        case InnovationFamily::Uniform:
            return location_ + 0.5 * scale_;
        case InnovationFamily::Exponential:
            return scale_;
        case InnovationFamily::StudentT:
            return dof_ > 1.0 ? 0.0 : std::numeric_limits<double>::quiet_NaN();
        default:
            return 0.0;
    }
}

double InnovationModel::variance() const {
    const double s2 = scale_ * scale_;
    switch (family_) {
        case InnovationFamily::Normal:
            return s2;
        case InnovationFamily::Logistic:
            return s2 * std::numbers::pi * std::numbers::pi / 3.0;
        case InnovationFamily::Laplace:
            return 2.0 * s2;
        case InnovationFamily::Uniform:
            return s2 / 12.0;
        case InnovationFamily::Exponential:
            return s2;
        case InnovationFamily::StudentT:
            return dof_ > 2.0 ? s2 * dof_ / (dof_ - 2.0) : kInf;
    }
    return kInf;
}

double InnovationModel::support_lower() const {
    switch (family_) {
        case InnovationFamily::Uniform:
            return location_;
        case InnovationFamily::Exponential:
            return 0.0;
        default:
            return -kInf;
    }
}

double InnovationModel::support_upper() const {
    return family_ == InnovationFamily::Uniform ? location_ + scale_ : kInf;
}

}  // namespace bklab
