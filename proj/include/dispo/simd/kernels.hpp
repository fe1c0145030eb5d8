#pragma once
// Data-parallel inner loops with a scalar reference and an AVX2 variant.
// The active variant is chosen once at first use from CPUID; set the
// environment variable DISPO_SIMD=scalar to force the reference path.
//
// Element-wise kernels (axpy) are bitwise identical across variants.
// Reductions reorder additions across lanes and agree to a few ulps.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace dispo::simd {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa) noexcept;

/// Best variant the running CPU supports and this build contains.
Isa detected_isa() noexcept;

/// Variant currently used by the dispatching wrappers below.
Isa active_isa() noexcept;

/// Forces a variant. Throws std::invalid_argument if it is unavailable.
void set_active_isa(Isa isa);

bool isa_available(Isa isa) noexcept;

// y[i] += a * x[i]
void axpy(double a, std::span<const double> x, std::span<double> y);

// Compensated (Neumaier) sum.
double sum(std::span<const double> x);

// Popcount of (a & b) and (a | b) over equal-length word arrays.
std::uint64_t popcount_and(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b);
std::uint64_t popcount_or(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b);

// Direct entry points, used by the equivalence tests.
namespace scalar {
void axpy(double a, const double* x, double* y, std::size_t n) noexcept;
double sum(const double* x, std::size_t n) noexcept;
std::uint64_t popcount_and(const std::uint64_t* a, const std::uint64_t* b, std::size_t n) noexcept;
std::uint64_t popcount_or(const std::uint64_t* a, const std::uint64_t* b, std::size_t n) noexcept;
}  // namespace scalar

#if defined(DISPO_HAVE_AVX2_KERNELS)
namespace avx2 {
void axpy(double a, const double* x, double* y, std::size_t n) noexcept;
double sum(const double* x, std::size_t n) noexcept;
std::uint64_t popcount_and(const std::uint64_t* a, const std::uint64_t* b, std::size_t n) noexcept;
std::uint64_t popcount_or(const std::uint64_t* a, const std::uint64_t* b, std::size_t n) noexcept;
}  // namespace avx2
#endif

}  // namespace dispo::simd
