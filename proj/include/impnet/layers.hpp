#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "impnet/tensor.hpp"

namespace impnet {

enum class Activation { ReLU, Identity };

// Convolution layer: K filters of height M (frequency) x width N (time) x
// depth G (input maps), one shared bias per output map. The forward pass is
// a valid cross-correlation (no kernel flip, no padding) sliding over both
// spatial axes; time-only behaviour is structural, obtained by choosing
// M equal to the full input frequency extent (and the frequency-axis
// arrangement by the transpose choice).
struct ConvLayer {
    std::size_t filter_height = 1;  // M
    std::size_t filter_width = 1;   // N
    std::size_t in_maps = 1;        // G
    std::size_t out_maps = 1;       // K
    Activation activation = Activation::ReLU;

    // Filter bank packed as one tensor of shape (M, N, G*K); filter k
    // occupies map slots [k*G, (k+1)*G).
    Tensor filters;
    // Shape (K, 1, 1).
    Tensor biases;

    Shape filters_shape() const {
        return Shape(filter_height, filter_width, in_maps * out_maps);
    }
    Shape output_shape(const Shape& in) const;
    std::size_t parameter_count() const {
        return filters_shape().elements() + out_maps;
    }
};

struct ConvGrad {
    Tensor d_filters;
    Tensor d_biases;
    Tensor d_input;
};

// Non-overlapping intramap (spatial) max pooling over p x q blocks.
// Dimensions that do not divide evenly are right-truncated; the shape
// planner reports that once per network as a warning.
struct IntramapPoolSpec {
    std::size_t p = 1;  // pooling height (frequency)
    std::size_t q = 1;  // pooling width (time)
};

// Max across r consecutive feature maps per spatial position. stride == r
// gives disjoint groups (IMP); stride == 1 gives overlapping groups with
// output map count maps - r + 1 (IMPO, no wraparound).
struct IntermapPoolSpec {
    std::size_t r = 1;
    std::size_t stride = 1;
};

// Records, for each output element (in linear order), the linear index of
// the winning input element. Ties are resolved at forward time toward the
// smallest linear index (for intermap pooling, the smallest map index).
struct ArgIndexMap {
    Shape input_shape;
    Shape output_shape;
    std::vector<std::uint32_t> winner;
};

struct PoolResult {
    Tensor output;
    ArgIndexMap argmap;
};

struct DenseLayer {
    std::size_t in_units = 1;
    std::size_t out_units = 1;
    Activation activation = Activation::ReLU;

    // Shape (in_units, out_units, 1): weight.at(i, o, 0) multiplies input i
    // into output o, so each output reads a contiguous column.
    Tensor weight;
    // Shape (out_units, 1, 1).
    Tensor bias;

    std::size_t parameter_count() const { return in_units * out_units + out_units; }
};

struct DenseGrad {
    Tensor d_weight;
    Tensor d_bias;
    Tensor d_input;
};

// Diagnostics collected during an instrumented forward pass; used by the
// gradient checker to exclude samples adjacent to ReLU kinks or pooling
// ties.
struct ForwardStats {
    double min_relu_preact_abs = std::numeric_limits<double>::infinity();
    double min_pool_margin = std::numeric_limits<double>::infinity();
};

Tensor conv_forward(const Tensor& input, const ConvLayer& layer,
                    ForwardStats* stats = nullptr);

// `output` is the forward result for the same input (supplies the ReLU
// mask); `upstream` is dLoss/dOutput.
ConvGrad conv_backward(const Tensor& input, const Tensor& output,
                       const ConvLayer& layer, const Tensor& upstream);

PoolResult intramap_pool_forward(const Tensor& input, const IntramapPoolSpec& spec,
                                 ForwardStats* stats = nullptr);
Tensor intramap_pool_backward(const ArgIndexMap& argmap, const Tensor& upstream);

PoolResult intermap_pool_forward(const Tensor& input, const IntermapPoolSpec& spec,
                                 ForwardStats* stats = nullptr);
// Overlapping groups can elect the same input element from several groups;
// their upstream contributions accumulate.
Tensor intermap_pool_backward(const ArgIndexMap& argmap, const Tensor& upstream);

Tensor dense_forward(const Tensor& input, const DenseLayer& layer,
                     ForwardStats* stats = nullptr);
DenseGrad dense_backward(const Tensor& input, const Tensor& output,
                         const DenseLayer& layer, const Tensor& upstream);

struct SoftmaxXent {
    double loss = 0.0;
    std::vector<double> grad;  // softmax(logits) - one_hot(label)
};

// Max-subtracted, overflow-safe softmax cross-entropy.
SoftmaxXent softmax_xent(const std::vector<double>& logits, std::size_t label);

std::vector<double> softmax(const std::vector<double>& logits);

// Shape planning used by both the layer kernels and the model builder.
Shape intramap_pool_output_shape(const Shape& in, const IntramapPoolSpec& spec);
Shape intermap_pool_output_shape(const Shape& in, const IntermapPoolSpec& spec);

}  // namespace impnet
