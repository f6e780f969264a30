#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace boulescope {

// SplitMix64: tiny, fully specified generator. Seeding is a single store, which
// matters because every simulated reading gets its own stream.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t sequence_no) {
    SplitMix64 mix(seed ^ 0x6a09e667f3bcc909ULL);
    const std::uint64_t a = mix();
    SplitMix64 mix2(a ^ (sequence_no * 0xd1342543de82ef95ULL + 1));
    return mix2();
}

/// Standard normal draw conditioned on |z| <= bound, by rejection. Uses
/// Box-Muller on our own uniforms so results do not depend on the standard
/// library's distribution implementation.
inline double truncated_standard_normal(SplitMix64& rng, double bound) {
    constexpr double two_pi = 6.283185307179586476925286766559;
    for (;;) {
        const double u1 = 1.0 - rng.uniform();  // (0, 1]
        const double u2 = rng.uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double z0 = radius * std::cos(two_pi * u2);
        if (std::abs(z0) <= bound) return z0;
        const double z1 = radius * std::sin(two_pi * u2);
        if (std::abs(z1) <= bound) return z1;
    }
}

}  // namespace boulescope
