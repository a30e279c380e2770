#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "impnet/error.hpp"

namespace impnet {

// Dense rank-3 tensor over (frequency, time, maps), 64-bit floats.
//
// Linear layout is frequency-fastest:
//   index(f, t, m) = f + freq_bins * (t + time_steps * m)
// so a convolution window sliding along time reads contiguous frequency
// columns.

struct Shape {
    std::size_t freq_bins = 0;
    std::size_t time_steps = 0;
    std::size_t maps = 0;

    Shape() = default;
    Shape(std::size_t f, std::size_t t, std::size_t m);

    std::size_t elements() const { return freq_bins * time_steps * maps; }
    bool operator==(const Shape&) const = default;
    std::string str() const;
};

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(const Shape& shape);  // zero-initialized

    const Shape& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }

    double& at(std::size_t f, std::size_t t, std::size_t m) {
        return data_[f + shape_.freq_bins * (t + shape_.time_steps * m)];
    }
    const double& at(std::size_t f, std::size_t t, std::size_t m) const {
        return data_[f + shape_.freq_bins * (t + shape_.time_steps * m)];
    }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    bool operator==(const Tensor&) const = default;

private:
    Shape shape_{};
    std::vector<double> data_;
};

// Debug-mode finiteness scanning. When enabled, every layer output is
// scanned and a NumericError is raised on NaN/Inf; when disabled the scan
// is skipped. Defaults to enabled in debug builds, disabled otherwise;
// the IMPNET_DEBUG_CHECKS environment variable (0/1) overrides at startup.
bool debug_checks_enabled();
void set_debug_checks(bool enabled);

// Scans unconditionally; throws NumericError naming `what` on violation.
void require_finite(const Tensor& t, const char* what);

// Scans only when debug checks are enabled.
void check_finite(const Tensor& t, const char* what);

Tensor zeros(const Shape& shape);

// Contiguous sub-block along time; frequency and map extents preserved.
Tensor slice_time(const Tensor& t, std::size_t start, std::size_t len);

// Extends the time axis by `left`/`right` frames copying the nearest edge
// frame into each padded position.
Tensor pad_time_replicate(const Tensor& t, std::size_t left, std::size_t right);

}  // namespace impnet
