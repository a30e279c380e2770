#include "impnet/random.hpp"

#include <cmath>

namespace impnet {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    // One SplitMix64 step seeded at base ^ stream spreads nearby stream
    // indices across the full 64-bit space.
    SplitMix64 mixer(base ^ (stream * 0xD6E8FEB86659FD93ULL));
    return mixer.next_u64();
}

GaussianSource::GaussianSource(std::uint64_t seed, double mean, double stddev)
    : rng_(seed), mean_(mean), stddev_(stddev) {
    if (stddev < 0.0) {
        throw ShapeError("GaussianSource stddev must be >= 0");
    }
}

double GaussianSource::sample_standard() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    // Box-Muller; u1 in (0,1] keeps log finite. Both draws of the pair are
    // consumed: the sine branch is cached for the next call.
    const double u1 = rng_.next_unit();
    const double u2 = rng_.next_unit();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    cached_ = radius * std::sin(angle);
    has_cached_ = true;
    return radius * std::cos(angle);
}

double GaussianSource::sample() { return mean_ + stddev_ * sample_standard(); }

Tensor gaussian_fill(const Shape& shape, GaussianSource& src) {
    Tensor out(shape);
    for (double& v : out.values()) v = src.sample();
    return out;
}

}  // namespace impnet
