#pragma once

#include <cstdint>
#include <random>

namespace ppgsleep {

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Independent stream seed: splitmix64(seed + (stream + 1) * golden ratio).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

/// mt19937_64 with distributions written out here: the std:: distributions
/// are implementation-defined, and models and synthetic cohorts must be
/// bit-identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    // [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Unbiased integer in [0, n); n > 0.
    std::uint64_t below(std::uint64_t n);
    // Standard normal (Box-Muller; the second variate is cached).
    double normal();
    double normal(double mean, double sd) { return mean + sd * normal(); }
    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace ppgsleep
