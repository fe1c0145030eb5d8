#include "dispo/simd/kernels.hpp"

#include <bit>
#include <cmath>

namespace dispo::simd::scalar {

void axpy(double a, const double* x, double* y, std::size_t n) noexcept {
    for (std::size_t i = 0; i < n; ++i) {
        y[i] += a * x[i];
    }
}

double sum(const double* x, std::size_t n) noexcept {
    double s = 0.0;
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = s + x[i];
        c += std::abs(s) >= std::abs(x[i]) ? (s - t) + x[i] : (x[i] - t) + s;
        s = t;
    }
    return s + c;
}

std::uint64_t popcount_and(const std::uint64_t* a, const std::uint64_t* b, std::size_t n) noexcept {
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        total += static_cast<std::uint64_t>(std::popcount(a[i] & b[i]));
    }
    return total;
}

std::uint64_t popcount_or(const std::uint64_t* a, const std::uint64_t* b, std::size_t n) noexcept {
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        total += static_cast<std::uint64_t>(std::popcount(a[i] | b[i]));
    }
    return total;
}

}  // namespace dispo::simd::scalar
