#include "dispo/rng.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dispo {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

void SeedHasher::byte(unsigned char b) noexcept {
    state_ ^= b;
    state_ *= 0x100000001b3ULL;
}

SeedHasher& SeedHasher::add(std::uint64_t value) noexcept {
    for (int i = 0; i < 8; ++i) {
        byte(static_cast<unsigned char>((value >> (8 * i)) & 0xffU));
    }
    return *this;
}

SeedHasher& SeedHasher::add(std::string_view text) noexcept {
    for (char c : text) byte(static_cast<unsigned char>(c));
    byte(0x1f);
    return *this;
}

std::uint64_t SeedHasher::finish() const noexcept { return splitmix64(state_); }

std::uint64_t Rng::uniform_below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("uniform_below: bound must be positive");
    // Reject the low (2^64 mod bound) raw values so every residue is equally likely.
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        const std::uint64_t r = engine_();
        if (r >= threshold) return r % bound;
    }
}

double Rng::uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    for (;;) {
        const double u = 2.0 * uniform01() - 1.0;
        const double v = 2.0 * uniform01() - 1.0;
        const double s = u * u + v * v;
        if (s > 0.0 && s < 1.0) {
            return u * std::sqrt(-2.0 * std::log(s) / s);
        }
    }
}

double Rng::log_gamma(double shape) {
    if (!(shape > 0.0)) throw std::invalid_argument("log_gamma: shape must be positive");
    if (shape < 1.0) {
        const double boosted = log_gamma(shape + 1.0);
        double u = uniform01();
        while (u == 0.0) u = uniform01();
        return boosted + std::log(u) / shape;
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = 0.0;
        double v = 0.0;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform01();
        if (u < 1.0 - 0.0331 * x * x * x * x) return std::log(d * v);
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return std::log(d * v);
    }
}

}  // namespace dispo
