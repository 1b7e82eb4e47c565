#pragma once

// Reproducible random streams.
//
// Engine: std::mt19937_64 (its output sequence is fixed by the C++ standard).
// Seeding: the engine is seeded with splitmix64(seed ^ splitmix64(purpose * 2^32 + index)),
// so every (seed, purpose, replicate) triple gets an independent stream.
// Normals use the Marsaglia polar method on 53-bit uniforms, which is portable
// (std::normal_distribution is implementation-defined).

#include <cmath>
#include <cstdint>
#include <random>

namespace simmer {

enum class StreamPurpose : std::uint32_t {
    init = 1,
    velocities = 2,
    sampling = 3,
    data_noise = 4,
    split = 5,
    test = 99,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}
    Rng(std::uint64_t seed, StreamPurpose purpose, std::uint32_t index = 0)
        : engine_(splitmix64(seed ^ splitmix64((static_cast<std::uint64_t>(purpose) << 32) | index))) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer on [0, n).
    std::uint64_t below(std::uint64_t n) {
        // rejection to stay unbiased
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t r;
        do {
            r = engine_();
        } while (r >= limit);
        return r % n;
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace simmer
