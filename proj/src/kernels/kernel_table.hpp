#pragma once

#include <cstddef>

namespace bklab::kernels::detail {

struct KernelTable {
    double (*dot)(const double* a, const double* b, std::size_t n);
    void (*correlate)(const double* w, std::size_t nw, const double* in, double* out,
                      std::size_t nout);
    double (*normal_cdf_mean)(double x, const double* s, std::size_t m, double scale);
    double (*normal_pdf_mean)(double x, const double* s, std::size_t m, double scale);
    double (*logistic_cdf_mean)(double x, const double* s, std::size_t m, double scale);
    double (*logistic_pdf_mean)(double x, const double* s, std::size_t m, double scale);
    void (*normal_cdf)(const double* in, double* out, std::size_t n, double loc, double scale);
    void (*logistic_cdf)(const double* in, double* out, std::size_t n, double loc, double scale);
};

const KernelTable& scalar_table();
#if defined(BKLAB_HAVE_AVX2)
const KernelTable& avx2_table();
#endif

}  // namespace bklab::kernels::detail
