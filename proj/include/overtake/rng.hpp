#pragma once

#include <cstdint>
#include <random>

namespace overtake {

/// Seeded random source. The engine sequence is fixed by the standard, and
/// the distributions are implemented here so that draws are identical across
/// standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform();
    double uniform(double lo, double hi);

    /// Standard normal via Box-Muller.
    double normal();
    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    bool bernoulli(double p);

private:
    std::mt19937_64 engine_;
};

/// Derives an independent stream seed from a base seed and an index.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index);

} // namespace overtake
