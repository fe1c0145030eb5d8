#include "dispo/simd/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace dispo::simd {

namespace {

struct KernelTable {
    void (*axpy)(double, const double*, double*, std::size_t) noexcept;
    double (*sum)(const double*, std::size_t) noexcept;
    std::uint64_t (*popcount_and)(const std::uint64_t*, const std::uint64_t*, std::size_t) noexcept;
    std::uint64_t (*popcount_or)(const std::uint64_t*, const std::uint64_t*, std::size_t) noexcept;
};

constexpr KernelTable kScalarTable{&scalar::axpy, &scalar::sum, &scalar::popcount_and,
                                   &scalar::popcount_or};

#if defined(DISPO_HAVE_AVX2_KERNELS)
constexpr KernelTable kAvx2Table{&avx2::axpy, &avx2::sum, &avx2::popcount_and,
                                 &avx2::popcount_or};
#endif

const KernelTable& table_for(Isa isa) noexcept {
#if defined(DISPO_HAVE_AVX2_KERNELS)
    if (isa == Isa::avx2) return kAvx2Table;
#endif
    (void)isa;
    return kScalarTable;
}

Isa initial_isa() noexcept {
    if (const char* forced = std::getenv("DISPO_SIMD")) {
        if (std::string(forced) == "scalar") return Isa::scalar;
    }
    return detected_isa();
}

std::atomic<Isa>& active() noexcept {
    static std::atomic<Isa> isa{initial_isa()};
    return isa;
}

const KernelTable& current() noexcept { return table_for(active().load(std::memory_order_relaxed)); }

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
    }
    return "unknown";
}

Isa detected_isa() noexcept {
#if defined(DISPO_HAVE_AVX2_KERNELS)
    __builtin_cpu_init();
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("popcnt")) return Isa::avx2;
#endif
    return Isa::scalar;
}

bool isa_available(Isa isa) noexcept {
    return isa == Isa::scalar || detected_isa() == isa;
}

Isa active_isa() noexcept { return active().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
    if (!isa_available(isa)) {
        throw std::invalid_argument("SIMD variant not available on this CPU: " + std::string(isa_name(isa)));
    }
    active().store(isa, std::memory_order_relaxed);
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("axpy: length mismatch");
    current().axpy(a, x.data(), y.data(), x.size());
}

double sum(std::span<const double> x) { return current().sum(x.data(), x.size()); }

std::uint64_t popcount_and(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
    if (a.size() != b.size()) throw std::invalid_argument("popcount_and: length mismatch");
    return current().popcount_and(a.data(), b.data(), a.size());
}

std::uint64_t popcount_or(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
    if (a.size() != b.size()) throw std::invalid_argument("popcount_or: length mismatch");
    return current().popcount_or(a.data(), b.data(), a.size());
}

}  // namespace dispo::simd
