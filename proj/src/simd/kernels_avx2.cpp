// Compiled with -mavx2 -mpopcnt -ffp-contract=off. Only reached through the
// dispatcher after CPUID confirms AVX2.

#include "dispo/simd/kernels.hpp"

#include <immintrin.h>

#include <bit>
#include <cmath>

namespace dispo::simd::avx2 {

namespace {

// Lane-wise Neumaier step: (s, c) absorbs v.
inline void neumaier_add(__m256d& s, __m256d& c, __m256d v) {
    const __m256d sign = _mm256_set1_pd(-0.0);
    const __m256d t = _mm256_add_pd(s, v);
    const __m256d s_larger = _mm256_cmp_pd(_mm256_andnot_pd(sign, s), _mm256_andnot_pd(sign, v), _CMP_GE_OQ);
    const __m256d big = _mm256_blendv_pd(v, s, s_larger);
    const __m256d small = _mm256_blendv_pd(s, v, s_larger);
    c = _mm256_add_pd(c, _mm256_add_pd(_mm256_sub_pd(big, t), small));
    s = t;
}

inline double finish_lanes(__m256d s, __m256d c, const double* tail, std::size_t tail_n) {
    alignas(32) double sl[4];
    alignas(32) double cl[4];
    _mm256_store_pd(sl, s);
    _mm256_store_pd(cl, c);
    double total = 0.0;
    double comp = 0.0;
    auto add = [&](double v) {
        const double t = total + v;
        comp += std::abs(total) >= std::abs(v) ? (total - t) + v : (v - t) + total;
        total = t;
    };
    for (int lane = 0; lane < 4; ++lane) add(sl[lane]);
    for (std::size_t i = 0; i < tail_n; ++i) add(tail[i]);
    for (int lane = 0; lane < 4; ++lane) comp += cl[lane];
    return total + comp;
}

// Nibble-lookup popcount (pshufb), summed per 64-bit lane.
inline __m256i popcount_lanes(__m256i v) {
    const __m256i lookup = _mm256_setr_epi8(0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4,
                                            0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4);
    const __m256i low_mask = _mm256_set1_epi8(0x0f);
    const __m256i lo = _mm256_and_si256(v, low_mask);
    const __m256i hi = _mm256_and_si256(_mm256_srli_epi16(v, 4), low_mask);
    const __m256i counts = _mm256_add_epi8(_mm256_shuffle_epi8(lookup, lo), _mm256_shuffle_epi8(lookup, hi));
    return _mm256_sad_epu8(counts, _mm256_setzero_si256());
}

inline std::uint64_t horizontal_sum_u64(__m256i v) {
    alignas(32) std::uint64_t lanes[4];
    _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), v);
    return lanes[0] + lanes[1] + lanes[2] + lanes[3];
}

template <typename Op>
std::uint64_t popcount_binary(const std::uint64_t* a, const std::uint64_t* b, std::size_t n, Op op) noexcept {
    __m256i acc = _mm256_setzero_si256();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i));
        const __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i));
        acc = _mm256_add_epi64(acc, popcount_lanes(op(va, vb)));
    }
    std::uint64_t total = horizontal_sum_u64(acc);
    for (; i < n; ++i) {
        const std::uint64_t w = op.scalar(a[i], b[i]);
        total += static_cast<std::uint64_t>(std::popcount(w));
    }
    return total;
}

struct AndOp {
    __m256i operator()(__m256i x, __m256i y) const { return _mm256_and_si256(x, y); }
    std::uint64_t scalar(std::uint64_t x, std::uint64_t y) const { return x & y; }
};

struct OrOp {
    __m256i operator()(__m256i x, __m256i y) const { return _mm256_or_si256(x, y); }
    std::uint64_t scalar(std::uint64_t x, std::uint64_t y) const { return x | y; }
};

}  // namespace

void axpy(double a, const double* x, double* y, std::size_t n) noexcept {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256d y0 = _mm256_loadu_pd(y + i);
        const __m256d y1 = _mm256_loadu_pd(y + i + 4);
        const __m256d p0 = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
        const __m256d p1 = _mm256_mul_pd(va, _mm256_loadu_pd(x + i + 4));
        _mm256_storeu_pd(y + i, _mm256_add_pd(y0, p0));
        _mm256_storeu_pd(y + i + 4, _mm256_add_pd(y1, p1));
    }
    for (; i + 4 <= n; i += 4) {
        const __m256d p = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), p));
    }
    for (; i < n; ++i) {
        y[i] += a * x[i];
    }
}

double sum(const double* x, std::size_t n) noexcept {
    __m256d s = _mm256_setzero_pd();
    __m256d c = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        neumaier_add(s, c, _mm256_loadu_pd(x + i));
    }
    return finish_lanes(s, c, x + i, n - i);
}

std::uint64_t popcount_and(const std::uint64_t* a, const std::uint64_t* b, std::size_t n) noexcept {
    return popcount_binary(a, b, n, AndOp{});
}

std::uint64_t popcount_or(const std::uint64_t* a, const std::uint64_t* b, std::size_t n) noexcept {
    return popcount_binary(a, b, n, OrOp{});
}

}  // namespace dispo::simd::avx2
