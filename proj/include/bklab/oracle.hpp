#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bklab/innovation.hpp"
#include "bklab/model.hpp"

namespace bklab {

/// Numerical marginal law of X_1 built from F(x) = E F_eps(x - X_{1,0}).
///
/// The mixture route averages F_eps over M draws s_j of the predictor
/// X_{1,0} = sum_{k>=1} c_k eps_{1-k}. When the marginal is known in closed
/// form (Gaussian innovations, or an empty past) the exact law is exposed as
/// well and, unless disabled, used for cdf/pdf/quantile.
class MarginalOracle {
public:
    enum class Exact { None, Innovation, Gaussian };

    struct QuantileDensity {
        double quantile;
        double density;  // f(Q(y))
    };

    /// F, using the exact law when available.
    double cdf(double x) const;
    double pdf(double x) const;
    /// Q(y) with F(Q(y)) = y to within 1e-10; DomainError outside (0, 1).
    double quantile(double y) const;
    QuantileDensity quantile_density(double y) const;
    /// Same as quantile_density; `hint` seeds the root search of the mixture route.
    QuantileDensity quantile_density(double y, double hint) const;
    /// out[i] = F(in[i]).
    void cdf_batch(std::span<const double> in, std::span<double> out) const;

    double mixture_cdf(double x) const;
    double mixture_pdf(double x) const;
    double mixture_quantile(double y, std::optional<double> hint = std::nullopt) const;

    Exact exact_kind() const { return use_exact_ ? exact_ : Exact::None; }
    bool exact() const { return exact_kind() != Exact::None; }
    bool has_closed_form() const { return exact_ != Exact::None; }
    /// sd of the Gaussian closed form.
    double gaussian_sd() const { return gaussian_sd_; }
    double closed_form_cdf(double x) const;
    double closed_form_pdf(double x) const;
    double closed_form_quantile(double y) const;

    const InnovationModel& innovations() const { return innovations_; }
    std::span<const double> mixture_points() const { return points_; }
    std::uint64_t seed() const { return seed_; }
    const std::vector<std::string>& warnings() const { return warnings_; }

    static constexpr std::size_t kDefaultMixturePoints = 100000;
    static constexpr double kRootTolerance = 1e-12;

private:
    friend MarginalOracle build_marginal_oracle(const LinearProcessModel&, std::size_t, std::uint64_t, bool);
    friend MarginalOracle build_truncated_oracle(const LinearProcessModel&, std::size_t, std::size_t,
                                                 std::uint64_t, bool);

    explicit MarginalOracle(InnovationModel innovations) : innovations_(std::move(innovations)) {}

    double innovation_cdf_mean(double x) const;
    double innovation_pdf_mean(double x) const;

    InnovationModel innovations_;
    std::vector<double> points_;
    double point_min_ = 0.0;
    double point_max_ = 0.0;
    Exact exact_ = Exact::None;
    bool use_exact_ = true;
    double gaussian_sd_ = 0.0;
    std::uint64_t seed_ = 0;
    std::vector<std::string> warnings_;
};

/// Builds the oracle from `mixture_points` draws of X_{1,0}, truncated at the
/// model horizon K (Gaussian innovations add an independent N(0, tail) term so
/// the mixture is exact in law). M < 1000 attaches a warning. With
/// prefer_exact = false the mixture route is used even when a closed form exists.
MarginalOracle build_marginal_oracle(const LinearProcessModel& model,
                                     std::size_t mixture_points = MarginalOracle::kDefaultMixturePoints,
                                     std::uint64_t seed = 0, bool prefer_exact = true);

/// Oracle of X_hat = sum_{k < lag_count} c_k eps_{i-k}, the process with only
/// the first `lag_count` weights retained (lag_count >= 1).
MarginalOracle build_truncated_oracle(const LinearProcessModel& model, std::size_t lag_count,
                                      std::size_t mixture_points, std::uint64_t seed,
                                      bool prefer_exact = true);

/// Least-squares slopes of log f(Q(y)) against log y on y in [1e-5, 1e-2]
/// (gamma1) and of log f(Q(1 - y)) against log y (gamma2).
struct CsrExponents {
    double gamma1 = 0.0;
    double gamma2 = 0.0;
    double residual1 = 0.0;  // RMS residual of the fit
    double residual2 = 0.0;
};

CsrExponents csr_exponents(const MarginalOracle& oracle);

}  // namespace bklab
