#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace switchcode {

/// Deterministic random source used everywhere a seed appears.
///
/// The bit stream is std::mt19937_64, which the C++ standard pins exactly, and
/// all value mappings (53-bit uniform, Box-Muller normal, modulo integer draw)
/// are implemented here rather than with std::*_distribution, whose output is
/// implementation-defined. Identical seeds therefore give identical draw
/// sequences for a given build.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t raw() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in (0, 1): rejects exact zeros.
    double uniform_open() {
        double u = uniform();
        while (u == 0.0) u = uniform();
        return u;
    }

    /// Standard normal via Box-Muller. Draws two uniforms per pair and caches
    /// the second value, so draw order is fixed regardless of call pattern.
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        cached_ = r * std::sin(theta);
        has_cached_ = true;
        return r * std::cos(theta);
    }

    /// Uniform integer in [0, n). Plain modulo: the bias is irrelevant here,
    /// determinism is what matters.
    std::uint64_t integer_below(std::uint64_t n) { return engine_() % n; }

  private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace switchcode
