#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "bklab/bk.hpp"
#include "bklab/errors.hpp"
#include "bklab/harness.hpp"

namespace bklab {

RateFit fit_rate(std::span<const std::pair<double, double>> pairs) {
    return fit_rate(pairs, [](double n) { return rate_b(n); });
}

RateFit fit_rate(std::span<const std::pair<double, double>> pairs, const std::function<double(double)>& normalizer) {
    if (pairs.size() < 3) throw ConfigError(fmt::format("rate fit needs at least 3 points, got {}", pairs.size()));
    const double k = static_cast<double>(pairs.size());
    double mx = 0.0;
    double my = 0.0;
    for (const auto& [n, s] : pairs) {
        if (!(s > 0.0)) throw NumericalError(fmt::format("rate fit needs positive statistics, got {} at n = {}", s, n));
        if (!(n > 0.0)) throw NumericalError(fmt::format("rate fit needs positive n, got {}", n));
        mx += std::log(n);
        my += std::log(s);
    }
    mx /= k;
    my /= k;
    double sxy = 0.0;
    double sxx = 0.0;
    double lo = INFINITY;
    double hi = 0.0;
    for (const auto& [n, s] : pairs) {
        const double dx = std::log(n) - mx;
        sxy += dx * (std::log(s) - my);
        sxx += dx * dx;
        const double ratio = s / normalizer(n);
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
    }
    if (!(sxx > 0.0)) throw NumericalError("rate fit needs at least two distinct n");
    RateFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.ratio_stability = hi / lo;
    return fit;
}

double spread_ratio(std::span<const double> values) {
    if (values.empty()) throw DomainError("spread of an empty set");
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    if (!(*lo > 0.0)) throw NumericalError("spread ratio needs positive values");
    return *hi / *lo;
}

double median(std::vector<double> v) {
    if (v.empty()) throw DomainError("median of an empty set");
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

}  // namespace bklab
