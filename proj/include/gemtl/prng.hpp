#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace gemtl {

/// Counter-based generator. Sample n of a stream is splitmix64(seed + (n + 1) * golden),
/// so the stream is a pure function of (seed, n) and identical on every platform.
/// This algorithm is part of the checkpoint/dataset reproducibility contract: do not change it.
class Prng {
public:
    explicit Prng(std::uint64_t seed = 0) noexcept : seed_(seed) {}

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] std::uint64_t counter() const noexcept { return counter_; }

    std::uint64_t next_u64() noexcept {
        ++counter_;
        return mix(seed_ + counter_ * kGolden);
    }

    /// Uniform in [0, 1) with 53 bits of mantissa.
    double next_unit() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * next_unit(); }

    /// Uniform integer in [0, n). Uses rejection so the result is unbiased.
    std::uint64_t below(std::uint64_t n) noexcept {
        if (n <= 1) {
            return 0;
        }
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v = next_u64();
        while (v >= limit) {
            v = next_u64();
        }
        return v % n;
    }

    /// Standard normal via Box-Muller; consumes two samples per call.
    double normal() noexcept {
        const double u1 = 1.0 - next_unit();  // (0, 1]
        const double u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Independent child stream; does not advance this generator.
    [[nodiscard]] Prng split(std::uint64_t stream) const noexcept {
        return Prng(mix(seed_ ^ mix(stream + kGolden)));
    }

private:
    static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

    static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

}  // namespace gemtl
