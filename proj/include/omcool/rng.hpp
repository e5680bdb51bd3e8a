#pragma once

#include <cmath>
#include <cstdint>

// Self-contained counter-style RNG so results are bit-reproducible across
// platforms and thread counts. Each trajectory owns a SplitMix64 stream
// whose initial state is derived from (master_seed, stream_index); normal
// variates come from an explicit Box-Muller transform.
namespace omcool::rng {

struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform on [0, 1): top 53 bits scaled by 2^-53.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1]: as above but shifted one ulp, so log() is safe.
    double uniform_pos() {
        return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
    }
};

// Stream seed for index i: finalizer rounds applied to
// master + (i+1) * 2^64/phi. Changing either input decorrelates the stream.
inline std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Box-Muller: two independent standard normals from two uniforms,
//   r = sqrt(-2 ln u1), (z0, z1) = r (cos, sin)(2 pi u2).
inline void normal_pair(SplitMix64& gen, double& z0, double& z1) {
    const double u1 = gen.uniform_pos();
    const double u2 = gen.uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    constexpr double two_pi = 6.283185307179586476925286766559;
    z0 = r * std::cos(two_pi * u2);
    z1 = r * std::sin(two_pi * u2);
}

}  // namespace omcool::rng
