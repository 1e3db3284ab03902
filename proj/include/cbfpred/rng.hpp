#pragma once

#include <cstdint>
#include <random>

namespace cbfpred {

/// Seeded random source with hand-rolled uniform mappings. std::mt19937_64 has
/// a portable bit stream, but the std distributions do not, so mapping the raw
/// 64-bit output ourselves keeps seeded results identical across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform in {0, ..., n-1}. Modulo bias is < 2^-53 for desk-scale n.
    std::uint64_t uniform_index(std::uint64_t n) { return eng_() % n; }

private:
    std::mt19937_64 eng_;
};

}  // namespace cbfpred
