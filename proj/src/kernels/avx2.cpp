// AVX2/FMA kernel variants. Compiled with -mavx2 -mfma; only reached through
// the dispatch table after a CPUID check.

#include <immintrin.h>

#include <cmath>
#include <numbers>

#include "kernel_table.hpp"

namespace bklab::kernels::detail {
namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779399461;
constexpr double kSqrtHalf = std::numbers::sqrt2 / 2.0;

// Chebyshev coefficients of h(u) = erfcx(z) / t on u in [-1, 1], with
// t = 2 / (2 + z) and u = 2t - 1, so that erfc(z) = t * h(u) * exp(-z^2)
// for z >= 0. Truncation error below 1e-18 relative.
constexpr double kErfcCheb[] = {
    5.7703373861646968862e-1,  3.5543692127049848731e-1,  6.509515882878652455e-2,
    3.6711423958366391659e-3,  -1.1128447433526324969e-3, -1.6075829915378079758e-4,
    3.2780315741731370605e-5,  5.4424416455050160333e-6,  -1.5154665553171481622e-6,
    -1.4297608181169864917e-7, 8.234608827419493433e-8,   -1.2962846852306562536e-9,
    -4.1547216310151983042e-9, 6.3470582783628111814e-10, 1.4320822712256223707e-10,
    -6.1603901052045855418e-11, 2.0612138554721696306e-12, 3.571493148847704445e-12,
    -8.5864228432517964757e-13, -6.1456002137906305539e-14, 7.4187257485966170572e-14,
    -1.2895042755032325614e-14, -2.358726385710632358e-15, 1.5729349381685911409e-15,
    -2.2782966239546465294e-16, -6.3123304507564296903e-17, 3.5916763531814921794e-17,
    -5.0498091498477280829e-18, -1.5324541113154910903e-18, 8.9033452889906221596e-19,
};
constexpr int kErfcChebLen = static_cast<int>(sizeof(kErfcCheb) / sizeof(kErfcCheb[0]));

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline __m256d abs_pd(__m256d x) { return _mm256_andnot_pd(_mm256_set1_pd(-0.0), x); }

// exp(x) for x <= ~709. Inputs below -708 flush to zero.
inline __m256d exp_pd(__m256d x) {
    const __m256d lower = _mm256_set1_pd(-708.0);
    const __m256d underflow = _mm256_cmp_pd(x, lower, _CMP_LT_OQ);
    x = _mm256_max_pd(x, lower);
    x = _mm256_min_pd(x, _mm256_set1_pd(709.0));

    const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(std::numbers::log2e)),
                                      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(6.93147180369123816490e-01), x);
    r = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.90821492927058770002e-10), r);

    // Taylor polynomial to degree 13 on |r| <= ln(2)/2.
    __m256d p = _mm256_set1_pd(1.0 / 6227020800.0);
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 479001600.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 39916800.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 3628800.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 362880.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 40320.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 5040.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 720.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 120.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 24.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 6.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.5));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

    const __m128i ni = _mm256_cvtpd_epi32(n);
    __m256i bits = _mm256_cvtepi32_epi64(ni);
    bits = _mm256_slli_epi64(_mm256_add_epi64(bits, _mm256_set1_epi64x(1023)), 52);
    const __m256d result = _mm256_mul_pd(p, _mm256_castsi256_pd(bits));
    return _mm256_andnot_pd(underflow, result);
}

// exp(-z*z) with the square split into head and tail so large |z| keeps
// full relative accuracy.
inline __m256d exp_neg_sq(__m256d z, __m256d factor) {
    const __m256d hi = _mm256_mul_pd(z, z);
    const __m256d lo = _mm256_fmsub_pd(z, z, hi);
    const __m256d e = exp_pd(_mm256_mul_pd(_mm256_sub_pd(_mm256_setzero_pd(), factor), hi));
    return _mm256_fnmadd_pd(_mm256_mul_pd(e, factor), lo, e);
}

// erfc(a) for a >= 0.
inline __m256d erfc_nonneg(__m256d a) {
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d two = _mm256_set1_pd(2.0);
    const __m256d t = _mm256_div_pd(two, _mm256_add_pd(two, a));
    const __m256d u = _mm256_fmsub_pd(two, t, one);
    const __m256d u2 = _mm256_add_pd(u, u);
    __m256d b1 = _mm256_setzero_pd();
    __m256d b2 = _mm256_setzero_pd();
    for (int j = kErfcChebLen - 1; j >= 1; --j) {
        const __m256d b0 = _mm256_add_pd(_mm256_fmsub_pd(u2, b1, b2), _mm256_set1_pd(kErfcCheb[j]));
        b2 = b1;
        b1 = b0;
    }
    const __m256d h = _mm256_add_pd(_mm256_fmsub_pd(u, b1, b2), _mm256_set1_pd(kErfcCheb[0]));
    return _mm256_mul_pd(_mm256_mul_pd(t, h), exp_neg_sq(a, one));
}

inline __m256d std_normal_cdf(__m256d z) {
    const __m256d w = _mm256_mul_pd(_mm256_sub_pd(_mm256_setzero_pd(), z), _mm256_set1_pd(kSqrtHalf));
    const __m256d half_e = _mm256_mul_pd(_mm256_set1_pd(0.5), erfc_nonneg(abs_pd(w)));
    const __m256d neg = _mm256_cmp_pd(w, _mm256_setzero_pd(), _CMP_LT_OQ);
    return _mm256_blendv_pd(half_e, _mm256_sub_pd(_mm256_set1_pd(1.0), half_e), neg);
}

inline __m256d std_normal_pdf(__m256d z) {
    return _mm256_mul_pd(_mm256_set1_pd(kInvSqrt2Pi), exp_neg_sq(z, _mm256_set1_pd(0.5)));
}

inline __m256d std_logistic_cdf(__m256d z) {
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d e = exp_pd(_mm256_sub_pd(_mm256_setzero_pd(), abs_pd(z)));
    const __m256d denom = _mm256_add_pd(one, e);
    const __m256d ge = _mm256_cmp_pd(z, _mm256_setzero_pd(), _CMP_GE_OQ);
    return _mm256_div_pd(_mm256_blendv_pd(e, one, ge), denom);
}

inline __m256d std_logistic_pdf(__m256d z) {
    const __m256d e = exp_pd(_mm256_sub_pd(_mm256_setzero_pd(), abs_pd(z)));
    const __m256d denom = _mm256_add_pd(_mm256_set1_pd(1.0), e);
    return _mm256_div_pd(e, _mm256_mul_pd(denom, denom));
}

// Tails are broadcast into a full vector so every element goes through the
// same arithmetic as the main loop.
template <__m256d (*G)(__m256d)>
inline double apply_one(double z) {
    alignas(32) double buf[4];
    _mm256_store_pd(buf, G(_mm256_set1_pd(z)));
    return buf[0];
}

double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    __m256d acc2 = _mm256_setzero_pd();
    __m256d acc3 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
        acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
        acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    }
    double acc = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
    for (; i < n; ++i) acc = std::fma(a[i], b[i], acc);
    return acc;
}

// Vectorized across outputs: each lane owns one output index and walks the
// weights, so short filters still fill the registers.
void correlate(const double* w, std::size_t nw, const double* in, double* out, std::size_t nout) {
    std::size_t i = 0;
    for (; i + 16 <= nout; i += 16) {
        __m256d o0 = _mm256_setzero_pd();
        __m256d o1 = _mm256_setzero_pd();
        __m256d o2 = _mm256_setzero_pd();
        __m256d o3 = _mm256_setzero_pd();
        const double* base = in + i;
        for (std::size_t k = 0; k < nw; ++k) {
            const __m256d wk = _mm256_broadcast_sd(w + k);
            o0 = _mm256_fmadd_pd(wk, _mm256_loadu_pd(base + k), o0);
            o1 = _mm256_fmadd_pd(wk, _mm256_loadu_pd(base + k + 4), o1);
            o2 = _mm256_fmadd_pd(wk, _mm256_loadu_pd(base + k + 8), o2);
            o3 = _mm256_fmadd_pd(wk, _mm256_loadu_pd(base + k + 12), o3);
        }
        _mm256_storeu_pd(out + i, o0);
        _mm256_storeu_pd(out + i + 4, o1);
        _mm256_storeu_pd(out + i + 8, o2);
        _mm256_storeu_pd(out + i + 12, o3);
    }
    for (; i + 4 <= nout; i += 4) {
        __m256d o = _mm256_setzero_pd();
        for (std::size_t k = 0; k < nw; ++k) {
            o = _mm256_fmadd_pd(_mm256_broadcast_sd(w + k), _mm256_loadu_pd(in + i + k), o);
        }
        _mm256_storeu_pd(out + i, o);
    }
    for (; i < nout; ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < nw; ++k) acc = std::fma(w[k], in[i + k], acc);
        out[i] = acc;
    }
}

template <__m256d (*G)(__m256d)>
double mixture_mean(double x, const double* s, std::size_t m, double scale) {
    const __m256d xv = _mm256_set1_pd(x);
    const __m256d inv = _mm256_set1_pd(1.0 / scale);
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t j = 0;
    for (; j + 8 <= m; j += 8) {
        acc0 = _mm256_add_pd(acc0, G(_mm256_mul_pd(_mm256_sub_pd(xv, _mm256_loadu_pd(s + j)), inv)));
        acc1 = _mm256_add_pd(acc1, G(_mm256_mul_pd(_mm256_sub_pd(xv, _mm256_loadu_pd(s + j + 4)), inv)));
    }
    for (; j + 4 <= m; j += 4) {
        acc0 = _mm256_add_pd(acc0, G(_mm256_mul_pd(_mm256_sub_pd(xv, _mm256_loadu_pd(s + j)), inv)));
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; j < m; ++j) acc += apply_one<G>((x - s[j]) * (1.0 / scale));
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

template <__m256d (*G)(__m256d)>
void batch(const double* in, double* out, std::size_t n, double loc, double scale) {
    const __m256d locv = _mm256_set1_pd(loc);
    const __m256d inv = _mm256_set1_pd(1.0 / scale);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, G(_mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(in + i), locv), inv)));
    }
    for (; i < n; ++i) out[i] = apply_one<G>((in[i] - loc) * (1.0 / scale));
}

void normal_cdf(const double* in, double* out, std::size_t n, double loc, double scale) {
    batch<std_normal_cdf>(in, out, n, loc, scale);
}
void logistic_cdf(const double* in, double* out, std::size_t n, double loc, double scale) {
    batch<std_logistic_cdf>(in, out, n, loc, scale);
}

}  // namespace

const KernelTable& avx2_table() {
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
