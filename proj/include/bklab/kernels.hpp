#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference
// implementation and, on x86-64, an AVX2/FMA variant. The variant is chosen
// once at startup from CPUID; BKLAB_ISA=scalar in the environment forces the
// reference path. Variants agree to rounding (see tests/unit/test_kernels.cpp).

#include <span>
#include <string_view>

namespace bklab::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa);
bool isa_available(Isa isa);
Isa active_isa();

/// Switch the process-wide kernel table. Throws DomainError when the ISA is
/// not supported by this CPU or build.
void set_isa(Isa isa);

/// Restores the previous ISA on scope exit. Test helper.
class ScopedIsa {
public:
    explicit ScopedIsa(Isa isa) : previous_(active_isa()) { set_isa(isa); }
    ~ScopedIsa() { set_isa(previous_); }
    ScopedIsa(const ScopedIsa&) = delete;
    ScopedIsa& operator=(const ScopedIsa&) = delete;

private:
    Isa previous_;
};

double dot(std::span<const double> a, std::span<const double> b);

/// out[i] = sum_k w[k] * in[i + k]; requires in.size() == out.size() + w.size() - 1.
void correlate(std::span<const double> w, std::span<const double> in, std::span<double> out);

/// Mixture means (1/M) sum_j G((x - shifts[j]) / scale) for the standard
/// normal and standard logistic CDF/PDF. The PDF variants include the 1/scale
/// Jacobian.
double normal_cdf_mean(double x, std::span<const double> shifts, double scale);
double normal_pdf_mean(double x, std::span<const double> shifts, double scale);
double logistic_cdf_mean(double x, std::span<const double> shifts, double scale);
double logistic_pdf_mean(double x, std::span<const double> shifts, double scale);

/// Elementwise out[i] = G((in[i] - loc) / scale).
void normal_cdf(std::span<const double> in, std::span<double> out, double loc, double scale);
void logistic_cdf(std::span<const double> in, std::span<double> out, double loc, double scale);

}  // namespace bklab::kernels
