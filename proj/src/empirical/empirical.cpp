#include "bklab/empirical.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fmt/format.h>

#include "bklab/errors.hpp"

namespace bklab {
namespace {

double root_n(const EmpiricalSummary& s) {
    if (s.n == 0) throw DomainError("empty sample");
    return std::sqrt(static_cast<double>(s.n));
}

}  // namespace

EmpiricalSummary summarize(std::span<const double> values, std::uint64_t source_seed) {
    EmpiricalSummary s;
    s.n = values.size();
    s.sorted.assign(values.begin(), values.end());
    std::sort(s.sorted.begin(), s.sorted.end());
    s.source_seed = source_seed;
    return s;
}

double edf(const EmpiricalSummary& s, double x) {
    if (s.n == 0) throw DomainError("empty sample");
    const auto count = std::upper_bound(s.sorted.begin(), s.sorted.end(), x) - s.sorted.begin();
    return static_cast<double>(count) / static_cast<double>(s.n);
}

std::size_t equantile_rank(std::size_t n, double y) {
    const double k = std::ceil(static_cast<double>(n) * y);
    return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(k, 1.0)), 1, n);
}

double equantile(const EmpiricalSummary& s, double y) {
    if (!(y > 0.0 && y <= 1.0)) throw DomainError(fmt::format("empirical quantile level {} outside (0, 1]", y));
    if (s.n == 0) throw DomainError("empty sample");
    return s.sorted[equantile_rank(s.n, y) - 1];
}

double beta_process(const EmpiricalSummary& s, const MarginalOracle& oracle, double x) {
    return root_n(s) * (edf(s, x) - oracle.cdf(x));
}

double alpha_process(const EmpiricalSummary& pit, double x) { return root_n(pit) * (edf(pit, x) - x); }

double q_process(const EmpiricalSummary& s, const MarginalOracle& oracle, double y) {
    return root_n(s) * (oracle.quantile(y) - equantile(s, y));
}

double u_process(const EmpiricalSummary& pit, double y) { return root_n(pit) * (y - equantile(pit, y)); }

std::vector<double> jump_grid(const EmpiricalSummary& pit, double a, double b, std::size_t refine) {
    if (!(a >= 0.0 && a < b && b <= 1.0)) throw DomainError(fmt::format("invalid interval ({}, {})", a, b));
    const std::size_t n = pit.n;
    std::vector<double> grid;
    grid.reserve(4 * n + refine);
    auto push_jump = [&](double p) {
        if (p - kJumpOffset > a && p - kJumpOffset < b) grid.push_back(p - kJumpOffset);
        if (p + kJumpOffset > a && p + kJumpOffset < b) grid.push_back(p + kJumpOffset);
    };
    for (std::size_t k = 1; k <= n; ++k) push_jump(static_cast<double>(k) / static_cast<double>(n));
    for (double u : pit.sorted) push_jump(u);
    for (std::size_t j = 1; j <= refine; ++j) {
        const double y = a + (b - a) * static_cast<double>(j) / static_cast<double>(refine + 1);
        if (y > a && y < b) grid.push_back(y);
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

double sup_abs_beta(const EmpiricalSummary& s, const MarginalOracle& oracle) {
    const double nn = static_cast<double>(s.n);
    double d = 0.0;
    std::size_t i = 0;
    while (i < s.n) {
        std::size_t j = i;
        while (j + 1 < s.n && s.sorted[j + 1] == s.sorted[i]) ++j;
        const double f = oracle.cdf(s.sorted[i]);
        d = std::max({d, std::fabs(static_cast<double>(j + 1) / nn - f), std::fabs(static_cast<double>(i) / nn - f)});
        i = j + 1;
    }
    return root_n(s) * d;
}

double sup_abs_alpha(const EmpiricalSummary& pit) {
    const double nn = static_cast<double>(pit.n);
    double d = 0.0;
    std::size_t i = 0;
    while (i < pit.n) {
        std::size_t j = i;
        while (j + 1 < pit.n && pit.sorted[j + 1] == pit.sorted[i]) ++j;
        const double u = pit.sorted[i];
        d = std::max({d, std::fabs(static_cast<double>(j + 1) / nn - u), std::fabs(static_cast<double>(i) / nn - u)});
        i = j + 1;
    }
    return root_n(pit) * d;
}

double sup_abs_u(const EmpiricalSummary& pit) {
    // On ((k-1)/n, k/n] the process is y - U_{k:n}; its sup is at the two ends.
    const double nn = static_cast<double>(pit.n);
    double d = 0.0;
    for (std::size_t k = 1; k <= pit.n; ++k) {
        const double u = pit.sorted[k - 1];
        d = std::max({d, std::fabs(static_cast<double>(k) / nn - u), std::fabs(static_cast<double>(k - 1) / nn - u)});
    }
    return root_n(pit) * d;
}

double increment_modulus(const EmpiricalSummary& pit, double d) {
    if (!(d > 0.0)) throw DomainError("increment window must be positive");
    const std::size_t n = pit.n;
    if (n == 0) throw DomainError("empty sample");
    const double nn = static_cast<double>(n);
    const auto& u = pit.sorted;

    // g(t) = E_n(t) - t is linear between jumps, so window extrema sit at
    // jump limits or at window ends; windows ending on a jump start at U_k - d.
    std::vector<double> t;
    t.reserve(3 * n + 2);
    {
        std::vector<double> lo(n);
        std::vector<double> hi(n);
        for (std::size_t k = 0; k < n; ++k) {
            lo[k] = std::clamp(u[k] - d, 0.0, 1.0);
            hi[k] = std::clamp(u[k] + d, 0.0, 1.0);
        }
        std::vector<double> tmp;
        tmp.reserve(2 * n);
        std::merge(lo.begin(), lo.end(), u.begin(), u.end(), std::back_inserter(tmp));
        t.push_back(0.0);
        std::merge(tmp.begin(), tmp.end(), hi.begin(), hi.end(), std::back_inserter(t));
        t.push_back(1.0);
    }
    t.erase(std::unique(t.begin(), t.end()), t.end());

    // Both one-sided limits at every candidate.
    struct Entry {
        double t;
        double g;
    };
    std::vector<Entry> entries;
    entries.reserve(2 * t.size());
    std::size_t below = 0;  // #{U < t}
    for (double s : t) {
        while (below < n && u[below] < s) ++below;
        std::size_t upto = below;  // #{U <= s}
        while (upto < n && u[upto] <= s) ++upto;
        entries.push_back({s, static_cast<double>(below) / nn - s});
        if (upto != below) entries.push_back({s, static_cast<double>(upto) / nn - s});
    }

    const double reach = d * (1.0 + 1e-12) + 1e-15;
    std::deque<std::size_t> maxq;
    std::deque<std::size_t> minq;
    double best = 0.0;
    std::size_t j = 0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        while (j < entries.size() && entries[j].t - entries[i].t <= reach) {
            while (!maxq.empty() && entries[maxq.back()].g <= entries[j].g) maxq.pop_back();
            maxq.push_back(j);
            while (!minq.empty() && entries[minq.back()].g >= entries[j].g) minq.pop_back();
            minq.push_back(j);
            ++j;
        }
        while (maxq.front() < i) maxq.pop_front();
        while (minq.front() < i) minq.pop_front();
        best = std::max(best, entries[maxq.front()].g - entries[minq.front()].g);
    }
    return best;
}

}  // namespace bklab
