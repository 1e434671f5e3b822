#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace xing {

using Rng = std::mt19937_64;

// Independent generator streams derived from one session seed. Each consumer
// owns its stream so that replacing one consumer (e.g. the synthetic driver
// by logged commands during replay) leaves the others untouched.
enum class RngStream : std::uint32_t {
    NetInit = 1,
    Agent = 2,
    World = 3,
    Driver = 4,
    Plan = 5,
    Warmup = 6,
};

inline Rng make_rng(std::uint64_t seed, RngStream stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    return Rng(seq);
}

// Uniform in [0, 1) with 53 random bits; independent of the standard
// library's distribution implementation.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

// Uniform integer in [0, n) by rejection, no modulo bias.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t v = rng();
    while (v >= limit) v = rng();
    return v % n;
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

// Box-Muller; consumes exactly two draws per call.
inline double normal(Rng& rng, double mean, double sd) {
    double u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    return mean + sd * z;
}

}  // namespace xing
