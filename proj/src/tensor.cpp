#include "impnet/tensor.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>

namespace impnet {

namespace {

constexpr std::size_t kMaxElements = std::size_t{1} << 31;

bool initial_debug_checks() {
    if (const char* env = std::getenv("IMPNET_DEBUG_CHECKS")) {
        return env[0] != '0';
    }
#ifdef NDEBUG
    return false;
#else
    return true;
#endif
}

std::atomic<bool> g_debug_checks{initial_debug_checks()};

}  // namespace

Shape::Shape(std::size_t f, std::size_t t, std::size_t m)
    : freq_bins(f), time_steps(t), maps(m) {
    if (f == 0 || t == 0 || m == 0) {
        throw ShapeError("Shape dimensions must all be >= 1, got " + str());
    }
    // Overflow guard: desk scale caps at 2^31 elements.
    if (t > kMaxElements / f || m > kMaxElements / (f * t)) {
        throw ShapeError("Shape " + str() + " exceeds the 2^31 element cap");
    }
}

std::string Shape::str() const {
    return std::to_string(freq_bins) + "x" + std::to_string(time_steps) + "x" +
           std::to_string(maps);
}

Tensor::Tensor(const Shape& shape) : shape_(shape), data_(shape.elements(), 0.0) {}

bool debug_checks_enabled() { return g_debug_checks.load(std::memory_order_relaxed); }

void set_debug_checks(bool enabled) {
    g_debug_checks.store(enabled, std::memory_order_relaxed);
}

void require_finite(const Tensor& t, const char* what) {
    for (double v : t.values()) {
        if (!std::isfinite(v)) {
            throw NumericError(std::string("non-finite value in ") + what);
        }
    }
}

void check_finite(const Tensor& t, const char* what) {
    if (debug_checks_enabled()) {
        require_finite(t, what);
    }
}

Tensor zeros(const Shape& shape) { return Tensor(shape); }

Tensor slice_time(const Tensor& t, std::size_t start, std::size_t len) {
    const Shape& s = t.shape();
    if (len == 0 || start + len > s.time_steps) {
        throw ShapeError("slice_time [" + std::to_string(start) + ", " +
                         std::to_string(start + len) + ") out of range for " + s.str());
    }
    Tensor out(Shape(s.freq_bins, len, s.maps));
    for (std::size_t m = 0; m < s.maps; ++m) {
        for (std::size_t j = 0; j < len; ++j) {
            const double* src = &t.at(0, start + j, m);
            double* dst = &out.at(0, j, m);
            for (std::size_t f = 0; f < s.freq_bins; ++f) dst[f] = src[f];
        }
    }
    return out;
}

Tensor pad_time_replicate(const Tensor& t, std::size_t left, std::size_t right) {
    const Shape& s = t.shape();
    Tensor out(Shape(s.freq_bins, s.time_steps + left + right, s.maps));
    for (std::size_t m = 0; m < s.maps; ++m) {
        for (std::size_t j = 0; j < s.time_steps + left + right; ++j) {
            // Clamp to the nearest in-range source frame.
            std::size_t src_t = j < left ? 0
                                : j >= left + s.time_steps ? s.time_steps - 1
                                                           : j - left;
            const double* src = &t.at(0, src_t, m);
            double* dst = &out.at(0, j, m);
            for (std::size_t f = 0; f < s.freq_bins; ++f) dst[f] = src[f];
        }
    }
    return out;
}

}  // namespace impnet
