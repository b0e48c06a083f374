#include "bklab/paths.hpp"

#include <algorithm>
#include <cmath>
#include <fftw3.h>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <limits>
#include <mutex>
#include <ostream>

#include "bklab/errors.hpp"
#include "bklab/kernels.hpp"
#include "bklab/rng.hpp"

namespace bklab {
namespace {

// The FFTW planner is not reentrant.
std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

std::size_t fft_size(std::size_t min_len) {
    std::size_t n = 1;
    while (n < min_len) n <<= 1;
    return n;
}

// Linear convolution of in with taps (c_1..c_K), keeping the K-1 .. K-1+n-1 window.
void convolve_transform(std::span<const double> taps, std::span<const double> in, std::span<double> out) {
    const std::size_t len = fft_size(in.size() + taps.size() - 1);
    const std::size_t half = len / 2 + 1;
    double* a = fftw_alloc_real(len);
    double* b = fftw_alloc_real(len);
    fftw_complex* fa = fftw_alloc_complex(half);
    fftw_complex* fb = fftw_alloc_complex(half);
    fftw_plan pa;
    fftw_plan pb;
    fftw_plan inv;
    {
        std::lock_guard lock(fftw_planner_mutex());
        pa = fftw_plan_dft_r2c_1d(static_cast<int>(len), a, fa, FFTW_ESTIMATE);
        pb = fftw_plan_dft_r2c_1d(static_cast<int>(len), b, fb, FFTW_ESTIMATE);
        inv = fftw_plan_dft_c2r_1d(static_cast<int>(len), fa, a, FFTW_ESTIMATE);
    }
    std::fill(a, a + len, 0.0);
    std::fill(b, b + len, 0.0);
    std::copy(in.begin(), in.end(), a);
    std::copy(taps.begin(), taps.end(), b);
    fftw_execute(pa);
    fftw_execute(pb);
    for (std::size_t k = 0; k < half; ++k) {
        const double re = fa[k][0] * fb[k][0] - fa[k][1] * fb[k][1];
        const double im = fa[k][0] * fb[k][1] + fa[k][1] * fb[k][0];
        fa[k][0] = re;
        fa[k][1] = im;
    }
    fftw_execute(inv);
    const double scale = 1.0 / static_cast<double>(len);
    const std::size_t offset = taps.size() - 1;
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = a[offset + j] * scale;
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(pa);
        fftw_destroy_plan(pb);
        fftw_destroy_plan(inv);
    }
    fftw_free(a);
    fftw_free(b);
    fftw_free(fa);
    fftw_free(fb);
}

}  // namespace

double SamplePath::eps(std::ptrdiff_t i) const {
    if (!innovations) throw StateError("path does not retain its innovations");
    const auto k = static_cast<std::ptrdiff_t>(horizon);
    if (i < 1 - k || i > static_cast<std::ptrdiff_t>(n)) {
        throw DomainError(fmt::format("innovation index {} outside [{}, {}]", i, 1 - k, n));
    }
    return (*innovations)[static_cast<std::size_t>(i + k - 1)];
}

void convolve_predictors(std::span<const double> taps, std::span<const double> innovations, std::span<double> out,
                         ConvolutionMethod method) {
    const std::size_t k = taps.size();
    const std::size_t n = out.size();
    if (innovations.size() != n + k) {
        throw DomainError(fmt::format("expected {} innovations for n = {} and K = {}, got {}", n + k, n, k,
                                      innovations.size()));
    }
    if (k == 0) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
    }
    const auto in = innovations.first(n + k - 1);
    if (method == ConvolutionMethod::Auto) {
        method = static_cast<double>(k) * static_cast<double>(n) <= kDirectConvolutionLimit
                     ? ConvolutionMethod::Direct
                     : ConvolutionMethod::Transform;
    }
    if (method == ConvolutionMethod::Transform) {
        convolve_transform(taps, in, out);
        return;
    }
    std::vector<double> w(taps.rbegin(), taps.rend());
    kernels::correlate(w, in, out);
}

SamplePath simulate_path(const LinearProcessModel& model, std::size_t n, std::uint64_t seed,
                         const SimulateOptions& options) {
    if (n == 0) throw DomainError("path length must be at least 1");
    const auto& c = model.coefficients();
    std::size_t horizon = model.horizon();
    if (options.trunc_tol_rel) {
        if (!(*options.trunc_tol_rel > 0.0)) throw DomainError("trunc_tol must be positive");
        horizon = truncation_horizon(c, *options.trunc_tol_rel * std::sqrt(c.sum_sq()));
    }
    const auto& innov = model.innovations();

    SamplePath path;
    path.n = n;
    path.seed = seed;
    path.model_id = model.id();
    path.horizon = horizon;

    UniformStream stream(seed);
    auto eps = std::make_shared<std::vector<double>>(n + horizon);
    for (auto& e : *eps) e = innov.sample(stream);

    std::vector<double> taps = c.head(horizon + 1);
    taps.erase(taps.begin());
    path.pred.resize(n);
    convolve_predictors(taps, *eps, path.pred, options.method);

    const double tail_var = innov.variance() * c.tail_sq(horizon + 1);
    if (model.gaussian() && tail_var > 0.0) {
        auto comp = std::make_shared<std::vector<double>>(n);
        const auto unit = InnovationModel::normal(1.0);
        const double sd = std::sqrt(tail_var);
        for (std::size_t i = 0; i < n; ++i) {
            (*comp)[i] = sd * unit.sample(stream);
            path.pred[i] += (*comp)[i];
        }
        path.compensator = std::move(comp);
        path.eps_tail_var = 0.0;
    } else {
        path.eps_tail_var = tail_var;
    }

    path.x.resize(n);
    for (std::size_t i = 0; i < n; ++i) path.x[i] = (*eps)[i + horizon] + path.pred[i];
    path.innovations = std::move(eps);
    return path;
}

std::vector<double> pit_transform(const SamplePath& path, const MarginalOracle& oracle) {
    std::vector<double> u(path.x.size());
    oracle.cdf_batch(path.x, u);
    const double lo = std::numeric_limits<double>::denorm_min();
    const double hi = std::nextafter(1.0, 0.0);
    for (auto& v : u) v = std::clamp(v, lo, hi);
    return u;
}

std::size_t truncated_lag_count(std::size_t i, double rho) {
    if (i == 0) throw DomainError("index must be at least 1");
    const double v = std::ceil(std::pow(static_cast<double>(i), rho));
    return std::max<std::size_t>(1, static_cast<std::size_t>(v));
}

SamplePath truncate_path(const SamplePath& path, const LinearProcessModel& model, double rho) {
    if (!(rho > 0.0 && rho < 0.5)) throw DomainError(fmt::format("rho = {} outside (0, 1/2)", rho));
    if (!path.has_innovations()) throw StateError("truncate_path needs the generating innovations");
    const std::size_t n = path.n;
    const std::size_t horizon = path.horizon;
    const auto& e = *path.innovations;

    const std::size_t max_lags = std::min(horizon, truncated_lag_count(n, rho) - 1);
    // wrev = (c_max, ..., c_1); the last m entries are the weights of lags m..1.
    std::vector<double> wrev = model.coefficients().head(max_lags + 1);
    wrev.erase(wrev.begin());
    std::reverse(wrev.begin(), wrev.end());

    SamplePath out;
    out.n = n;
    out.seed = path.seed;
    out.model_id = path.model_id;
    out.horizon = horizon;
    out.eps_tail_var = path.eps_tail_var;
    out.innovations = path.innovations;
    out.compensator = path.compensator;
    out.truncation_rho = rho;
    out.x.resize(n);
    out.pred.resize(n);
    const std::span<const double> w(wrev);
    for (std::size_t i = 1; i <= n; ++i) {
        const std::size_t lags = truncated_lag_count(i, rho) - 1;
        if (truncation_keeps_all(lags, horizon, path.compensator != nullptr)) {
            out.x[i - 1] = path.x[i - 1];
            out.pred[i - 1] = path.pred[i - 1];
            continue;
        }
        const std::size_t m = std::min(lags, horizon);
        // eps_{i-m} .. eps_{i-1} sit at e[i - m + K - 1 .. i + K - 2].
        const double p = m == 0 ? 0.0 : kernels::dot(w.last(m), std::span(e).subspan(i + horizon - 1 - m, m));
        out.pred[i - 1] = p;
        out.x[i - 1] = e[i + horizon - 1] + p;
    }
    return out;
}

void write_path_dump(std::ostream& out, const SamplePath& path) {
    fmt::print(out, "# model_id: {}\n# seed: {}\n# n: {}\n# K: {}\n# eps_tail_var: {:.17g}\n", path.model_id,
               path.seed, path.n, path.horizon, path.eps_tail_var);
    fmt::print(out, "i,x,pred\n");
    for (std::size_t i = 0; i < path.n; ++i) {
        fmt::print(out, "{},{:.17g},{:.17g}\n", i + 1, path.x[i], path.pred[i]);
    }
}

}  // namespace bklab
