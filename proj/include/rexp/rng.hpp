#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace rexp {

/// Single-owner random stream. The engine is std::mt19937_64 (bit-specified by
/// the standard); uniforms take the top 53 bits and normals come from the polar
/// Box-Muller transform, so streams are reproducible per seed on every toolchain.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() { return engine_(); }
    // Uniform on [0, 1).
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal();

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// n draws from N(mean, std^2). std == 0 returns n copies of mean.
std::vector<double> gaussian(SeededRng& rng, std::size_t n, double mean, double std);

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed for (round, slot) derived from the master seed. Slot 0 of round r is the
/// main model of that round (and the first multiverse member).
std::uint64_t split_seed(std::uint64_t master, std::uint64_t round, std::uint64_t slot) noexcept;

}  // namespace rexp
