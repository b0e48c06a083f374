#include <cmath>
#include <numbers>

#include "kernel_table.hpp"

namespace bklab::kernels::detail {
namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779399461;

inline double std_normal_cdf(double z) { return 0.5 * std::erfc(-z * std::numbers::sqrt2 / 2.0); }

inline double std_normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

inline double std_logistic_cdf(double z) {
    const double e = std::exp(-std::fabs(z));
    return z >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
}

inline double std_logistic_pdf(double z) {
    const double e = std::exp(-std::fabs(z));
    return e / ((1.0 + e) * (1.0 + e));
}

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void correlate(const double* w, std::size_t nw, const double* in, double* out, std::size_t nout) {
    for (std::size_t i = 0; i < nout; ++i) out[i] = dot(w, in + i, nw);
}

template <double (*G)(double)>
double mixture_mean(double x, const double* s, std::size_t m, double scale) {
    const double inv = 1.0 / scale;
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) acc += G((x - s[j]) * inv);
    return acc / static_cast<double>(m);
}

double normal_cdf_mean(double x, const double* s, std::size_t m, double scale) {
    return mixture_mean<std_normal_cdf>(x, s, m, scale);
}
double normal_pdf_mean(double x, const double* s, std::size_t m, double scale) {
    return mixture_mean<std_normal_pdf>(x, s, m, scale) / scale;
}
double logistic_cdf_mean(double x, const double* s, std::size_t m, double scale) {
    return mixture_mean<std_logistic_cdf>(x, s, m, scale);
}
double logistic_pdf_mean(double x, const double* s, std::size_t m, double scale) {
    return mixture_mean<std_logistic_pdf>(x, s, m, scale) / scale;
}

void normal_cdf(const double* in, double* out, std::size_t n, double loc, double scale) {
    const double inv = 1.0 / scale;
    for (std::size_t i = 0; i < n; ++i) out[i] = std_normal_cdf((in[i] - loc) * inv);
}

void logistic_cdf(const double* in, double* out, std::size_t n, double loc, double scale) {
    const double inv = 1.0 / scale;
    for (std::size_t i = 0; i < n; ++i) out[i] = std_logistic_cdf((in[i] - loc) * inv);
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable table{dot,
                                   correlate,
                                   normal_cdf_mean,
                                   normal_pdf_mean,
                                   logistic_cdf_mean,
                                   logistic_pdf_mean,
                                   normal_cdf,
                                   logistic_cdf};
    return table;
}

}  // namespace bklab::kernels::detail
