#include <atomic>
#include <cstdlib>
#include <string>

#include "bklab/errors.hpp"
#include "bklab/kernels.hpp"
#include "kernel_table.hpp"

namespace bklab::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(BKLAB_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const detail::KernelTable& table_for(Isa isa) {
#if defined(BKLAB_HAVE_AVX2)
    if (isa == Isa::Avx2) return detail::avx2_table();
#endif
    (void)isa;
    return detail::scalar_table();
}

Isa initial_isa() {
    if (const char* env = std::getenv("BKLAB_ISA"); env != nullptr && std::string(env) == "scalar") {
        return Isa::Scalar;
    }
    return cpu_has_avx2() ? Isa::Avx2 : Isa::Scalar;
}

struct State {
    std::atomic<Isa> isa{initial_isa()};
    std::atomic<const detail::KernelTable*> table{&table_for(isa.load())};
};

State& state() {
    static State s;
    return s;
}

const detail::KernelTable& current() { return *state().table.load(std::memory_order_acquire); }

void check_sizes(bool ok, const char* what) {
    if (!ok) throw DomainError(std::string("kernel size mismatch: ") + what);
}

}  // namespace

std::string_view isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

bool isa_available(Isa isa) { return isa == Isa::Scalar || cpu_has_avx2(); }

Isa active_isa() { return state().isa.load(); }

void set_isa(Isa isa) {
    if (!isa_available(isa)) {
        throw DomainError("instruction set '" + std::string(isa_name(isa)) + "' not available");
    }
    state().isa.store(isa);
    state().table.store(&table_for(isa), std::memory_order_release);
}

double dot(std::span<const double> a, std::span<const double> b) {
    check_sizes(a.size() == b.size(), "dot");
    return current().dot(a.data(), b.data(), a.size());
}

void correlate(std::span<const double> w, std::span<const double> in, std::span<double> out) {
    check_sizes(!w.empty() && in.size() + 1 == out.size() + w.size(), "correlate");
    current().correlate(w.data(), w.size(), in.data(), out.data(), out.size());
}

double normal_cdf_mean(double x, std::span<const double> shifts, double scale) {
    check_sizes(!shifts.empty(), "normal_cdf_mean");
    return current().normal_cdf_mean(x, shifts.data(), shifts.size(), scale);
}

double normal_pdf_mean(double x, std::span<const double> shifts, double scale) {
    check_sizes(!shifts.empty(), "normal_pdf_mean");
    return current().normal_pdf_mean(x, shifts.data(), shifts.size(), scale);
}

double logistic_cdf_mean(double x, std::span<const double> shifts, double scale) {
    check_sizes(!shifts.empty(), "logistic_cdf_mean");
    return current().logistic_cdf_mean(x, shifts.data(), shifts.size(), scale);
}

double logistic_pdf_mean(double x, std::span<const double> shifts, double scale) {
    check_sizes(!shifts.empty(), "logistic_pdf_mean");
    return current().logistic_pdf_mean(x, shifts.data(), shifts.size(), scale);
}

void normal_cdf(std::span<const double> in, std::span<double> out, double loc, double scale) {
    check_sizes(in.size() == out.size(), "normal_cdf");
    current().normal_cdf(in.data(), out.data(), in.size(), loc, scale);
}

void logistic_cdf(std::span<const double> in, std::span<double> out, double loc, double scale) {
    check_sizes(in.size() == out.size(), "logistic_cdf");
    current().logistic_cdf(in.data(), out.data(), in.size(), loc, scale);
}

}  // namespace bklab::kernels
