#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace aberrant_mix {

/// Random stream keyed by a base seed plus a path of stream indices
/// (start, replicate, ...). Streams with different keys are independent,
/// so results do not depend on the order tasks are scheduled in.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(mix(seed)) {}

    static Rng stream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
        std::uint64_t state = mix(seed);
        for (std::uint64_t k : keys) {
            state = mix(state ^ mix(k + 0x9E3779B97F4A7C15ULL));
        }
        return Rng(state);
    }

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
    double normal(double mean, double sd) { return mean + sd * normal(); }
    bool bernoulli(double p) { return uniform() < p; }
    int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
    double gamma(double shape) { return std::gamma_distribution<double>(shape, 1.0)(engine_); }
    double beta(double a, double b) {
        const double x = gamma(a);
        const double y = gamma(b);
        return x / (x + y);
    }

    std::mt19937_64& engine() { return engine_; }

    /// SplitMix64 finalizer.
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace aberrant_mix
