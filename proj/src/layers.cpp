#include "impnet/layers.hpp"

#include <algorithm>
#include <cmath>

namespace impnet {

namespace {

inline double activate(double x, Activation act) {
    return act == Activation::ReLU ? (x > 0.0 ? x : 0.0) : x;
}

// ReLU'(0) is defined as 0; output > 0 iff preactivation > 0.
inline double act_mask(double out, Activation act) {
    return act == Activation::ReLU ? (out > 0.0 ? 1.0 : 0.0) : 1.0;
}

void check_conv_shapes(const Shape& in, const ConvLayer& layer) {
    if (layer.in_maps != in.maps) {
        throw ShapeError("conv filter depth " + std::to_string(layer.in_maps) +
                         " != input maps " + std::to_string(in.maps));
    }
    if (layer.filter_height > in.freq_bins) {
        throw ShapeError("conv filter height " + std::to_string(layer.filter_height) +
                         " exceeds input frequency extent " +
                         std::to_string(in.freq_bins));
    }
    if (layer.filter_width > in.time_steps) {
        throw ShapeError("conv filter width " + std::to_string(layer.filter_width) +
                         " exceeds input time extent " + std::to_string(in.time_steps));
    }
    if (layer.filters.shape() != layer.filters_shape()) {
        throw ShapeError("conv filter bank shape " + layer.filters.shape().str() +
                         " != expected " + layer.filters_shape().str());
    }
    if (layer.biases.shape() != Shape(layer.out_maps, 1, 1)) {
        throw ShapeError("conv bias shape " + layer.biases.shape().str() +
                         " != expected " + Shape(layer.out_maps, 1, 1).str());
    }
}

}  // namespace

Shape ConvLayer::output_shape(const Shape& in) const {
    check_conv_shapes(in, *this);
    return Shape(in.freq_bins - filter_height + 1, in.time_steps - filter_width + 1,
                 out_maps);
}

Tensor conv_forward(const Tensor& input, const ConvLayer& layer, ForwardStats* stats) {
    const Shape& in = input.shape();
    const Shape out_shape = layer.output_shape(in);
    const std::size_t M = layer.filter_height, N = layer.filter_width;
    const std::size_t G = layer.in_maps, K = layer.out_maps;
    const std::size_t I = out_shape.freq_bins, J = out_shape.time_steps;
    const std::size_t F = in.freq_bins, T = in.time_steps;

    Tensor out(out_shape);
    const double* x = input.data();
    const double* w0 = layer.filters.data();

    for (std::size_t k = 0; k < K; ++k) {
        const double bias = layer.biases.data()[k];
        const double* wk = w0 + M * N * G * k;
        for (std::size_t j = 0; j < J; ++j) {
            for (std::size_t i = 0; i < I; ++i) {
                double acc = bias;
                for (std::size_t g = 0; g < G; ++g) {
                    for (std::size_t n = 0; n < N; ++n) {
                        const double* xcol = x + i + F * (j + n + T * g);
                        const double* wcol = wk + M * (n + N * g);
                        for (std::size_t m = 0; m < M; ++m) {
                            acc += xcol[m] * wcol[m];
                        }
                    }
                }
                if (stats && layer.activation == Activation::ReLU) {
                    stats->min_relu_preact_abs =
                        std::min(stats->min_relu_preact_abs, std::fabs(acc));
                }
                out.at(i, j, k) = activate(acc, layer.activation);
            }
        }
    }
    check_finite(out, "conv_forward output");
    return out;
}

ConvGrad conv_backward(const Tensor& input, const Tensor& output,
                       const ConvLayer& layer, const Tensor& upstream) {
    const Shape& in = input.shape();
    const Shape out_shape = layer.output_shape(in);
    if (upstream.shape() != out_shape || output.shape() != out_shape) {
        throw ShapeError("conv_backward upstream/output shape mismatch, expected " +
                         out_shape.str());
    }
    const std::size_t M = layer.filter_height, N = layer.filter_width;
    const std::size_t G = layer.in_maps, K = layer.out_maps;
    const std::size_t I = out_shape.freq_bins, J = out_shape.time_steps;
    const std::size_t F = in.freq_bins, T = in.time_steps;

    ConvGrad grad;
    grad.d_filters = Tensor(layer.filters_shape());
    grad.d_biases = Tensor(Shape(K, 1, 1));
    grad.d_input = Tensor(in);

    const double* x = input.data();
    const double* w0 = layer.filters.data();

    for (std::size_t k = 0; k < K; ++k) {
        const double* wk = w0 + M * N * G * k;
        double* dwk = grad.d_filters.data() + M * N * G * k;
        double dbias = 0.0;
        for (std::size_t j = 0; j < J; ++j) {
            for (std::size_t i = 0; i < I; ++i) {
                const double d =
                    upstream.at(i, j, k) * act_mask(output.at(i, j, k), layer.activation);
                if (d == 0.0) continue;
                dbias += d;
                for (std::size_t g = 0; g < G; ++g) {
                    for (std::size_t n = 0; n < N; ++n) {
                        const double* xcol = x + i + F * (j + n + T * g);
                        double* dxcol = grad.d_input.data() + i + F * (j + n + T * g);
                        const double* wcol = wk + M * (n + N * g);
                        double* dwcol = dwk + M * (n + N * g);
                        for (std::size_t m = 0; m < M; ++m) {
                            dwcol[m] += xcol[m] * d;
                            dxcol[m] += wcol[m] * d;
                        }
                    }
                }
            }
        }
        grad.d_biases.data()[k] = dbias;
    }
    return grad;
}

Shape intramap_pool_output_shape(const Shape& in, const IntramapPoolSpec& spec) {
    if (spec.p == 0 || spec.q == 0) {
        throw ShapeError("intramap pool sizes must be >= 1");
    }
    std::size_t of = in.freq_bins / spec.p;
    std::size_t ot = in.time_steps / spec.q;
    if (of == 0 || ot == 0) {
        throw ShapeError("intramap pool " + std::to_string(spec.p) + "x" +
                         std::to_string(spec.q) + " larger than input " + in.str());
    }
    return Shape(of, ot, in.maps);
}

PoolResult intramap_pool_forward(const Tensor& input, const IntramapPoolSpec& spec,
                                 ForwardStats* stats) {
    const Shape& in = input.shape();
    const Shape out_shape = intramap_pool_output_shape(in, spec);
    const std::size_t F = in.freq_bins, T = in.time_steps;

    PoolResult res;
    res.output = Tensor(out_shape);
    res.argmap.input_shape = in;
    res.argmap.output_shape = out_shape;
    res.argmap.winner.resize(out_shape.elements());

    for (std::size_t m = 0; m < in.maps; ++m) {
        for (std::size_t bt = 0; bt < out_shape.time_steps; ++bt) {
            for (std::size_t bf = 0; bf < out_shape.freq_bins; ++bf) {
                // Visit the block in increasing linear index so that the
                // strict comparison keeps the first-index winner on ties.
                double best = -std::numeric_limits<double>::infinity();
                double second = best;
                std::size_t best_idx = 0;
                for (std::size_t t = bt * spec.q; t < bt * spec.q + spec.q; ++t) {
                    for (std::size_t f = bf * spec.p; f < bf * spec.p + spec.p; ++f) {
                        const std::size_t idx = f + F * (t + T * m);
                        const double v = input.data()[idx];
                        if (v > best) {
                            second = best;
                            best = v;
                            best_idx = idx;
                        } else if (v > second) {
                            second = v;
                        }
                    }
                }
                const std::size_t out_idx =
                    bf + out_shape.freq_bins * (bt + out_shape.time_steps * m);
                res.output.values()[out_idx] = best;
                res.argmap.winner[out_idx] = static_cast<std::uint32_t>(best_idx);
                // Exact 0-0 ties between dead ReLU units are locally flat
                // (no gradient flows through either branch), so they are
                // not a differentiability hazard; the ReLU preact check
                // covers near-zero revivals.
                if (stats && std::isfinite(second) && !(best == 0.0 && second == 0.0)) {
                    stats->min_pool_margin =
                        std::min(stats->min_pool_margin, best - second);
                }
            }
        }
    }
    return res;
}

Tensor intramap_pool_backward(const ArgIndexMap& argmap, const Tensor& upstream) {
    if (upstream.shape() != argmap.output_shape) {
        throw ShapeError("pool backward upstream shape " + upstream.shape().str() +
                         " != recorded output shape " + argmap.output_shape.str());
    }
    Tensor grad(argmap.input_shape);
    for (std::size_t i = 0; i < argmap.winner.size(); ++i) {
        grad.values()[argmap.winner[i]] += upstream.values()[i];
    }
    return grad;
}

Shape intermap_pool_output_shape(const Shape& in, const IntermapPoolSpec& spec) {
    if (spec.r == 0) throw ShapeError("intermap group size must be >= 1");
    if (spec.stride != spec.r && spec.stride != 1) {
        throw ShapeError("intermap stride must be the group size (disjoint) or 1 "
                         "(overlapping)");
    }
    if (spec.stride == spec.r) {
        if (in.maps % spec.r != 0) {
            throw ShapeError("map count " + std::to_string(in.maps) +
                             " not divisible by intermap group size " +
                             std::to_string(spec.r));
        }
        return Shape(in.freq_bins, in.time_steps, in.maps / spec.r);
    }
    if (in.maps < spec.r) {
        throw ShapeError("map count " + std::to_string(in.maps) +
                         " smaller than overlapping intermap group size " +
                         std::to_string(spec.r));
    }
    return Shape(in.freq_bins, in.time_steps, in.maps - spec.r + 1);
}

PoolResult intermap_pool_forward(const Tensor& input, const IntermapPoolSpec& spec,
                                 ForwardStats* stats) {
    const Shape& in = input.shape();
    const Shape out_shape = intermap_pool_output_shape(in, spec);
    const std::size_t F = in.freq_bins, T = in.time_steps;
    const std::size_t plane = F * T;

    PoolResult res;
    res.output = Tensor(out_shape);
    res.argmap.input_shape = in;
    res.argmap.output_shape = out_shape;
    res.argmap.winner.resize(out_shape.elements());

    for (std::size_t k = 0; k < out_shape.maps; ++k) {
        const std::size_t first_map = k * spec.stride;
        for (std::size_t pos = 0; pos < plane; ++pos) {
            double best = -std::numeric_limits<double>::infinity();
            double second = best;
            std::size_t best_idx = 0;
            // Ascending map order; strict > keeps the smallest map on ties.
            for (std::size_t c = first_map; c < first_map + spec.r; ++c) {
                const std::size_t idx = pos + plane * c;
                const double v = input.data()[idx];
                if (v > best) {
                    second = best;
                    best = v;
                    best_idx = idx;
                } else if (v > second) {
                    second = v;
                }
            }
            res.output.values()[pos + plane * k] = best;
            res.argmap.winner[pos + plane * k] = static_cast<std::uint32_t>(best_idx);
            // Same 0-0 dead-unit exemption as the intramap pool.
            if (stats && std::isfinite(second) && !(best == 0.0 && second == 0.0)) {
                stats->min_pool_margin = std::min(stats->min_pool_margin, best - second);
            }
        }
    }
    return res;
}

Tensor intermap_pool_backward(const ArgIndexMap& argmap, const Tensor& upstream) {
    // Same routing rule; overlapping winners accumulate via +=.
    return intramap_pool_backward(argmap, upstream);
}

Tensor dense_forward(const Tensor& input, const DenseLayer& layer, ForwardStats* stats) {
    if (input.size() != layer.in_units) {
        throw ShapeError("dense input length " + std::to_string(input.size()) +
                         " != in_units " + std::to_string(layer.in_units));
    }
    if (layer.weight.shape() != Shape(layer.in_units, layer.out_units, 1)) {
        throw ShapeError("dense weight shape " + layer.weight.shape().str() +
                         " != expected " +
                         Shape(layer.in_units, layer.out_units, 1).str());
    }
    Tensor out(Shape(layer.out_units, 1, 1));
    const double* x = input.data();
    for (std::size_t o = 0; o < layer.out_units; ++o) {
        const double* col = layer.weight.data() + layer.in_units * o;
        double acc = layer.bias.data()[o];
        for (std::size_t i = 0; i < layer.in_units; ++i) acc += col[i] * x[i];
        if (stats && layer.activation == Activation::ReLU) {
            stats->min_relu_preact_abs =
                std::min(stats->min_relu_preact_abs, std::fabs(acc));
        }
        out.data()[o] = activate(acc, layer.activation);
    }
    check_finite(out, "dense_forward output");
    return out;
}

DenseGrad dense_backward(const Tensor& input, const Tensor& output,
                         const DenseLayer& layer, const Tensor& upstream) {
    if (upstream.size() != layer.out_units || output.size() != layer.out_units) {
        throw ShapeError("dense_backward upstream length mismatch");
    }
    DenseGrad grad;
    grad.d_weight = Tensor(Shape(layer.in_units, layer.out_units, 1));
    grad.d_bias = Tensor(Shape(layer.out_units, 1, 1));
    grad.d_input = Tensor(input.shape());

    const double* x = input.data();
    for (std::size_t o = 0; o < layer.out_units; ++o) {
        const double d = upstream.data()[o] * act_mask(output.data()[o], layer.activation);
        if (d == 0.0) continue;
        grad.d_bias.data()[o] = d;
        const double* col = layer.weight.data() + layer.in_units * o;
        double* dcol = grad.d_weight.data() + layer.in_units * o;
        for (std::size_t i = 0; i < layer.in_units; ++i) {
            dcol[i] = x[i] * d;
            grad.d_input.data()[i] += col[i] * d;
        }
    }
    return grad;
}

std::vector<double> softmax(const std::vector<double>& logits) {
    if (logits.empty()) throw ShapeError("softmax over empty logits");
    const double max = *std::max_element(logits.begin(), logits.end());
    std::vector<double> probs(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        probs[i] = std::exp(logits[i] - max);
        sum += probs[i];
    }
    for (double& p : probs) p /= sum;
    return probs;
}

SoftmaxXent softmax_xent(const std::vector<double>& logits, std::size_t label) {
    if (logits.empty()) throw ShapeError("softmax_xent over empty logits");
    if (label >= logits.size()) {
        throw ShapeError("label " + std::to_string(label) + " out of range for " +
                         std::to_string(logits.size()) + " logits");
    }
    const double max = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - max);

    SoftmaxXent res;
    res.loss = -(logits[label] - max - std::log(sum));
    res.grad.resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        res.grad[i] = std::exp(logits[i] - max) / sum - (i == label ? 1.0 : 0.0);
    }
    return res;
}

}  // namespace impnet
