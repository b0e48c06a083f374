#pragma once

#include <limits>
#include <string>

#include "bklab/rng.hpp"

namespace bklab {

enum class InnovationFamily { Normal, Logistic, Laplace, Uniform, Exponential, StudentT };

/// Law of the i.i.d. driving noise. Immutable value type; every query is a
/// closed-form evaluation.
class InnovationModel {
public:
    static InnovationModel normal(double scale = 1.0);
    static InnovationModel logistic(double scale = 1.0);
    static InnovationModel laplace(double scale = 1.0);
    static InnovationModel uniform(double lower = 0.0, double upper = 1.0);
    static InnovationModel exponential(double rate = 1.0);
    static InnovationModel student_t(double dof, double scale = 1.0);

    InnovationFamily family() const { return family_; }
    const std::string& name() const { return name_; }

    double cdf(double x) const;
    double pdf(double x) const;
    double pdf_deriv(double x) const;
    double pdf_deriv2(double x) const;
    /// Defined on (0, 1); throws DomainError outside.
    double quantile(double p) const;
    double sample(UniformStream& stream) const { return quantile(stream.next()); }

    /// Supremum of the moment orders alpha with E|eps|^alpha finite.
    double moment_order() const { return moment_order_; }
    /// Whether f, f' and f'' are bounded and continuous on the real line.
    bool smooth() const { return smooth_; }
    double mean() const;
    double variance() const;

    /// Scale parameter for location-scale families (normal, logistic,
    /// Laplace, Student t); upper - lower for uniform; 1/rate for exponential.
    double scale() const { return scale_; }
    /// Lower end for uniform; 0 otherwise.
    double location() const { return location_; }
    double dof() const { return dof_; }

    /// Support endpoints (possibly infinite).
    double support_lower() const;
    double support_upper() const;

private:
    InnovationModel(InnovationFamily family, std::string name, double location, double scale,
                    double dof, double moment_order, bool smooth);

    InnovationFamily family_;
    std::string name_;
    double location_;
    double scale_;
    double dof_;
    double moment_order_;
    bool smooth_;
};

}  // namespace bklab
