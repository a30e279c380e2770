#pragma once

#include <cstdint>

#include "impnet/tensor.hpp"

namespace impnet {

// SplitMix64: a counter-based 64-bit generator. The nth output is a pure
// function of (seed, n), so streams can be replayed or derived for
// parallel generation without shared state.
//
//   state_n = seed + (n + 1) * 0x9E3779B97F4A7C15
//   output  = mix(state_n)   (the usual 30/27/31 xor-shift-multiply mix)
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform double in (0, 1]: (upper 53 bits + 1) * 2^-53. Never 0, so it
    // is safe under log().
    double next_unit() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

private:
    std::uint64_t state_;
};

// Derives an independent stream seed from a base seed and a stream index
// (one mix round). Used for per-sample and per-epoch streams.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

// Seeded Gaussian stream: Box-Muller over SplitMix64 uniforms, both draws
// of each pair consumed (the second is cached and returned by the next
// call). Samples are mean + stddev * z, so stddev 0 yields exactly mean.
class GaussianSource {
public:
    GaussianSource(std::uint64_t seed, double mean, double stddev);

    double mean() const { return mean_; }
    double stddev() const { return stddev_; }

    double sample();

    // Standard-normal draw from the same underlying stream, ignoring the
    // configured mean/stddev. Network initialization scales these itself.
    double sample_standard();

private:
    SplitMix64 rng_;
    double mean_;
    double stddev_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

// Fills a fresh tensor with i.i.d. draws from `src` in linear order.
Tensor gaussian_fill(const Shape& shape, GaussianSource& src);

}  // namespace impnet
