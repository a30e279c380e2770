#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "impnet/layers.hpp"
#include "impnet/optimizer.hpp"
#include "impnet/tensor.hpp"

namespace impnet {

enum class LayerKind {
    ConvTime,
    ConvFreq,
    ReLU,
    IntramapPool,
    IntermapPool,
    Dense,
    SoftmaxOut,
};

const char* layer_kind_name(LayerKind kind);

// Declarative description of one layer. Only the fields relevant to `kind`
// are meaningful; validation happens during shape inference.
struct LayerSpec {
    LayerKind kind = LayerKind::ConvTime;

    // ConvTime / ConvFreq
    std::size_t filter_height = 1;  // M (frequency extent)
    std::size_t filter_width = 1;   // N (time extent)
    std::size_t out_maps = 1;       // K
    Activation activation = Activation::ReLU;  // also Dense

    // IntramapPool
    std::size_t p = 1;
    std::size_t q = 1;

    // IntermapPool
    std::size_t r = 1;
    std::size_t stride = 1;

    // Dense / SoftmaxOut
    std::size_t units = 1;

    // Applies to this layer's weight/filter draw; biases keep the config
    // default.
    std::optional<double> init_stddev_override;

    bool operator==(const LayerSpec&) const = default;
};

struct NetworkConfig {
    Shape input_shape{40, 21, 1};
    std::vector<LayerSpec> layers;
    std::uint64_t seed = 1;
    double weight_stddev = 0.01;
    double bias_stddev = 0.5;

    bool operator==(const NetworkConfig&) const = default;
};

// Flat text config format, one layer per line. Grammar in docs/formats.md.
NetworkConfig parse_config(const std::string& text);
NetworkConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const NetworkConfig& config);  // canonical form

struct ShapePlan {
    std::vector<Shape> shapes;  // output shape of each layer, in order
    std::vector<std::string> warnings;
};

// Validates the whole stack and returns each layer's output shape; throws
// ShapeError naming the first failing layer. Warnings report lossy but
// legal steps (pool truncation).
ShapePlan infer_shapes(const NetworkConfig& config);

enum class Mode { Train, Eval };
enum class InitMode { Gaussian, Zeros };

class Network;
Network build(const NetworkConfig& config, InitMode init = InitMode::Gaussian);

class Network {
public:
    Network() = default;

    const NetworkConfig& config() const { return config_; }
    const std::vector<Shape>& layer_output_shapes() const { return shapes_; }
    std::size_t layer_count() const { return layers_.size(); }
    const LayerSpec& layer_spec(std::size_t idx) const { return layers_[idx].spec; }
    // Parameter bank of a ConvTime/ConvFreq layer.
    const ConvLayer& conv_at(std::size_t idx) const;
    std::size_t classes() const;
    bool has_softmax_out() const;

    // Returns class scores: softmax probabilities when the network ends in
    // a softmax output layer, the flattened final activation otherwise.
    // Train mode additionally caches activations and pool argmaps for
    // backward(); scores are identical in both modes.
    std::vector<double> forward(const Tensor& input, Mode mode,
                                ForwardStats* stats = nullptr);

    // Stateless full forward trace (no caching); output of every layer.
    std::vector<Tensor> forward_all(const Tensor& input) const;

    struct BackwardResult {
        double loss = 0.0;
        std::vector<Tensor> grads;  // aligned with parameters() order
        Tensor input_grad;
    };
    // Cross-entropy loss and gradients for `label`, using the activations
    // cached by the last forward(Train). Requires a softmax output layer.
    BackwardResult backward(std::size_t label);

    double cached_loss(std::size_t label) const;

    std::vector<ParamRef> parameters();
    std::vector<std::string> parameter_names() const;
    std::size_t parameter_count() const;

private:
    friend Network build(const NetworkConfig&, InitMode);

    struct Instance {
        LayerSpec spec;
        ConvLayer conv;    // ConvTime / ConvFreq
        DenseLayer dense;  // Dense / SoftmaxOut
    };

    Tensor apply_layer(std::size_t idx, const Tensor& input, ForwardStats* stats,
                       ArgIndexMap* argmap_out) const;

    NetworkConfig config_;
    std::vector<Shape> shapes_;
    std::vector<Instance> layers_;

    // Train-mode caches (single-thread-per-instance; parallel training uses
    // per-thread Network replicas).
    bool train_cached_ = false;
    Tensor cached_input_;
    std::vector<Tensor> cached_outputs_;
    std::vector<ArgIndexMap> cached_argmaps_;
    std::vector<double> cached_logits_;
};

// Desk-scale architecture presets: "imp-toy" (wide first convolution with
// intermap pooling right after it), "impo-toy" (overlapping groups,
// stride 1), "freq-toy" (the same arrangement transposed to slide along
// frequency), "cnn-toy-6L" (no intermap pooling; first-layer map count
// equals imp-toy's post-pool count and the dense stage is widened so the
// two parameter budgets stay within a few percent). `classes` sizes the
// output layer.
NetworkConfig preset(const std::string& name, std::size_t classes = 5);

// Shrunken variants of each preset (tiny input, few maps, larger init
// stddev) used for gradient checking.
NetworkConfig reduced_preset(const std::string& name, std::size_t classes = 3);

std::vector<std::string> preset_names();
bool is_preset_name(const std::string& name);

// Loads a config from a preset name or a config file path.
NetworkConfig resolve_config(const std::string& name_or_path);

// Snapshot = manifest.json {config text, parameter names in network order}
// plus one IMPT container per parameter.
void save_snapshot(const std::filesystem::path& dir, Network& net);
Network load_snapshot(const std::filesystem::path& dir);

}  // namespace impnet
