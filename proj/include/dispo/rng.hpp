#pragma once
// Portable, replayable randomness.
//
// Every random stream is a std::mt19937_64 (its output sequence is fixed by
// the C++ standard). The derived draws below are implemented here rather than
// with <random> distributions, whose outputs vary between standard libraries.
// Recorded seeds therefore replay bit-for-bit on any conforming toolchain.
//
//   uniform_below(n)  rejection sampling on the raw 64-bit output
//   uniform01()       top 53 bits * 2^-53, in [0, 1)
//   normal()          Marsaglia polar method, spare value discarded
//   log_gamma(a)      Marsaglia-Tsang; for a < 1 uses Gamma(a+1) * U^(1/a) in log space
//
// Permutations are Durstenfeld's Fisher-Yates: for i = n-1 down to 1, swap
// element i with element uniform_below(i + 1).

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace dispo {

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Stable 64-bit hash of a sequence of fields (FNV-1a over the bytes, then a
/// splitmix64 finalizer). Integers are fed as 8 little-endian bytes; strings
/// as their UTF-8 bytes followed by a 0x1F unit separator.
class SeedHasher {
public:
    SeedHasher& add(std::uint64_t value) noexcept;
    SeedHasher& add(std::string_view text) noexcept;
    [[nodiscard]] std::uint64_t finish() const noexcept;

private:
    void byte(unsigned char b) noexcept;
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    std::uint64_t uniform_below(std::uint64_t bound);
    double uniform01();
    double normal();
    double log_gamma(double shape);

    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(uniform_below(i));
            using std::swap;
            swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace dispo
