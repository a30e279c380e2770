#include "impnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "impnet/io.hpp"
#include "impnet/random.hpp"

namespace impnet {

namespace {

bool is_conv(LayerKind k) { return k == LayerKind::ConvTime || k == LayerKind::ConvFreq; }

std::string layer_label(std::size_t idx, const LayerSpec& spec) {
    return "layer " + std::to_string(idx + 1) + " (" + layer_kind_name(spec.kind) + ")";
}

std::string param_prefix(std::size_t idx) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "L%02zu", idx + 1);
    return buf;
}

Activation parse_activation(const std::string& v, const std::string& where) {
    if (v == "relu") return Activation::ReLU;
    if (v == "identity") return Activation::Identity;
    throw ConfigError("unknown activation '" + v + "' in " + where);
}

const char* activation_name(Activation a) {
    return a == Activation::ReLU ? "relu" : "identity";
}

}  // namespace

const char* layer_kind_name(LayerKind kind) {
    switch (kind) {
        case LayerKind::ConvTime: return "conv_time";
        case LayerKind::ConvFreq: return "conv_freq";
        case LayerKind::ReLU: return "relu";
        case LayerKind::IntramapPool: return "intramap_pool";
        case LayerKind::IntermapPool: return "intermap_pool";
        case LayerKind::Dense: return "dense";
        case LayerKind::SoftmaxOut: return "softmax_out";
    }
    return "?";
}

ShapePlan infer_shapes(const NetworkConfig& config) {
    if (config.layers.empty()) {
        throw ShapeError("network has no layers");
    }
    ShapePlan plan;
    Shape cur = config.input_shape;
    for (std::size_t i = 0; i < config.layers.size(); ++i) {
        const LayerSpec& spec = config.layers[i];
        const std::string where = layer_label(i, spec);
        if (spec.kind == LayerKind::SoftmaxOut && i + 1 != config.layers.size()) {
            throw ShapeError(where + ": softmax output must be the last layer");
        }
        try {
            switch (spec.kind) {
                case LayerKind::ConvTime:
                case LayerKind::ConvFreq: {
                    if (spec.filter_height > cur.freq_bins) {
                        throw ShapeError("frequency underflow: filter height " +
                                         std::to_string(spec.filter_height) +
                                         " > input " + std::to_string(cur.freq_bins));
                    }
                    if (spec.filter_width > cur.time_steps) {
                        throw ShapeError("time underflow: filter width " +
                                         std::to_string(spec.filter_width) + " > input " +
                                         std::to_string(cur.time_steps));
                    }
                    cur = Shape(cur.freq_bins - spec.filter_height + 1,
                                cur.time_steps - spec.filter_width + 1, spec.out_maps);
                    break;
                }
                case LayerKind::ReLU:
                    break;
                case LayerKind::IntramapPool: {
                    IntramapPoolSpec ps{spec.p, spec.q};
                    Shape next = intramap_pool_output_shape(cur, ps);
                    if (cur.freq_bins % spec.p != 0 || cur.time_steps % spec.q != 0) {
                        plan.warnings.push_back(
                            where + ": input " + cur.str() + " not divisible by pool " +
                            std::to_string(spec.p) + "x" + std::to_string(spec.q) +
                            ", trailing remainder dropped");
                    }
                    cur = next;
                    break;
                }
                case LayerKind::IntermapPool: {
                    IntermapPoolSpec ps{spec.r, spec.stride};
                    cur = intermap_pool_output_shape(cur, ps);
                    break;
                }
                case LayerKind::Dense:
                    cur = Shape(spec.units, 1, 1);
                    break;
                case LayerKind::SoftmaxOut:
                    cur = Shape(spec.units, 1, 1);
                    break;
            }
        } catch (const ShapeError& e) {
            throw ShapeError(where + ": " + e.what());
        }
        plan.shapes.push_back(cur);
    }
    return plan;
}

Network build(const NetworkConfig& config, InitMode init) {
    ShapePlan plan = infer_shapes(config);
    for (const auto& w : plan.warnings) {
        std::cerr << "impnet: warning: " << w << "\n";
    }

    Network net;
    net.config_ = config;
    net.shapes_ = plan.shapes;

    // One unit-normal stream for the whole network, consumed in layer
    // order, weights/filters before biases; values are scaled by the
    // applicable stddev. Zeros mode allocates without consuming draws.
    GaussianSource src(config.seed, 0.0, 1.0);
    auto fill = [&](Tensor& t, double stddev) {
        if (init == InitMode::Gaussian) {
            for (double& v : t.values()) v = stddev * src.sample_standard();
        }
    };

    Shape cur = config.input_shape;
    for (std::size_t i = 0; i < config.layers.size(); ++i) {
        const LayerSpec& spec = config.layers[i];
        Network::Instance inst;
        inst.spec = spec;
        const double w_stddev = spec.init_stddev_override.value_or(config.weight_stddev);
        switch (spec.kind) {
            case LayerKind::ConvTime:
            case LayerKind::ConvFreq: {
                inst.conv.filter_height = spec.filter_height;
                inst.conv.filter_width = spec.filter_width;
                inst.conv.in_maps = cur.maps;
                inst.conv.out_maps = spec.out_maps;
                inst.conv.activation = spec.activation;
                inst.conv.filters = Tensor(inst.conv.filters_shape());
                inst.conv.biases = Tensor(Shape(spec.out_maps, 1, 1));
                fill(inst.conv.filters, w_stddev);
                fill(inst.conv.biases, config.bias_stddev);
                break;
            }
            case LayerKind::Dense:
            case LayerKind::SoftmaxOut: {
                inst.dense.in_units = cur.elements();
                inst.dense.out_units = spec.units;
                inst.dense.activation =
                    spec.kind == LayerKind::SoftmaxOut ? Activation::Identity
                                                       : spec.activation;
                inst.dense.weight = Tensor(Shape(inst.dense.in_units, spec.units, 1));
                inst.dense.bias = Tensor(Shape(spec.units, 1, 1));
                fill(inst.dense.weight, w_stddev);
                fill(inst.dense.bias, config.bias_stddev);
                break;
            }
            default:
                break;
        }
        net.layers_.push_back(std::move(inst));
        cur = plan.shapes[i];
    }
    return net;
}

const ConvLayer& Network::conv_at(std::size_t idx) const {
    if (idx >= layers_.size() || !is_conv(layers_[idx].spec.kind)) {
        throw ShapeError("layer " + std::to_string(idx + 1) + " is not convolutional");
    }
    return layers_[idx].conv;
}

std::size_t Network::classes() const {
    if (shapes_.empty()) throw ShapeError("empty network");
    return shapes_.back().elements();
}

bool Network::has_softmax_out() const {
    return !layers_.empty() && layers_.back().spec.kind == LayerKind::SoftmaxOut;
}

Tensor Network::apply_layer(std::size_t idx, const Tensor& input, ForwardStats* stats,
                            ArgIndexMap* argmap_out) const {
    const Instance& inst = layers_[idx];
    switch (inst.spec.kind) {
        case LayerKind::ConvTime:
        case LayerKind::ConvFreq:
            return conv_forward(input, inst.conv, stats);
        case LayerKind::ReLU: {
            Tensor out = input;
            for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
            return out;
        }
        case LayerKind::IntramapPool: {
            PoolResult res =
                intramap_pool_forward(input, {inst.spec.p, inst.spec.q}, stats);
            if (argmap_out) *argmap_out = std::move(res.argmap);
            return std::move(res.output);
        }
        case LayerKind::IntermapPool: {
            PoolResult res =
                intermap_pool_forward(input, {inst.spec.r, inst.spec.stride}, stats);
            if (argmap_out) *argmap_out = std::move(res.argmap);
            return std::move(res.output);
        }
        case LayerKind::Dense:
        case LayerKind::SoftmaxOut:
            return dense_forward(input, inst.dense, stats);
    }
    throw ShapeError("unreachable layer kind");
}

std::vector<double> Network::forward(const Tensor& input, Mode mode,
                                     ForwardStats* stats) {
    if (input.shape() != config_.input_shape) {
        throw ShapeError("input shape " + input.shape().str() +
                         " != configured input " + config_.input_shape.str());
    }
    const bool train = mode == Mode::Train;
    if (train) {
        cached_input_ = input;
        cached_outputs_.assign(layers_.size(), Tensor());
        cached_argmaps_.assign(layers_.size(), ArgIndexMap());
    }

    Tensor cur = input;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        ArgIndexMap argmap;
        cur = apply_layer(i, cur, stats, &argmap);
        if (train) {
            cached_outputs_[i] = cur;
            cached_argmaps_[i] = std::move(argmap);
        }
    }

    std::vector<double> scores = cur.values();
    if (has_softmax_out()) {
        if (train) cached_logits_ = scores;
        scores = softmax(scores);
    }
    train_cached_ = train;
    return scores;
}

std::vector<Tensor> Network::forward_all(const Tensor& input) const {
    if (input.shape() != config_.input_shape) {
        throw ShapeError("input shape " + input.shape().str() +
                         " != configured input " + config_.input_shape.str());
    }
    std::vector<Tensor> outputs;
    outputs.reserve(layers_.size());
    Tensor cur = input;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        cur = apply_layer(i, cur, nullptr, nullptr);
        outputs.push_back(cur);
    }
    return outputs;
}

double Network::cached_loss(std::size_t label) const {
    if (!train_cached_ || !has_softmax_out()) {
        throw ShapeError("cached_loss requires a prior forward(Train) and a softmax "
                         "output layer");
    }
    return softmax_xent(cached_logits_, label).loss;
}

Network::BackwardResult Network::backward(std::size_t label) {
    if (!train_cached_) {
        throw ShapeError("backward called without a prior forward(Train)");
    }
    if (!has_softmax_out()) {
        throw ShapeError("backward requires a softmax output layer");
    }

    BackwardResult result;
    SoftmaxXent xent = softmax_xent(cached_logits_, label);
    result.loss = xent.loss;

    // Gradient slots in parameters() order, filled during the reverse walk.
    std::vector<std::vector<Tensor>> per_layer(layers_.size());

    Tensor upstream(Shape(xent.grad.size(), 1, 1));
    upstream.values() = xent.grad;

    for (std::size_t ri = layers_.size(); ri-- > 0;) {
        const Instance& inst = layers_[ri];
        const Tensor& layer_input = ri == 0 ? cached_input_ : cached_outputs_[ri - 1];
        switch (inst.spec.kind) {
            case LayerKind::ConvTime:
            case LayerKind::ConvFreq: {
                ConvGrad g =
                    conv_backward(layer_input, cached_outputs_[ri], inst.conv, upstream);
                per_layer[ri].push_back(std::move(g.d_filters));
                per_layer[ri].push_back(std::move(g.d_biases));
                upstream = std::move(g.d_input);
                break;
            }
            case LayerKind::ReLU: {
                Tensor d(layer_input.shape());
                const Tensor& out = cached_outputs_[ri];
                for (std::size_t n = 0; n < d.size(); ++n) {
                    d.values()[n] =
                        out.values()[n] > 0.0 ? upstream.values()[n] : 0.0;
                }
                upstream = std::move(d);
                break;
            }
            case LayerKind::IntramapPool:
                upstream = intramap_pool_backward(cached_argmaps_[ri], upstream);
                break;
            case LayerKind::IntermapPool:
                upstream = intermap_pool_backward(cached_argmaps_[ri], upstream);
                break;
            case LayerKind::Dense:
            case LayerKind::SoftmaxOut: {
                DenseGrad g =
                    dense_backward(layer_input, cached_outputs_[ri], inst.dense, upstream);
                per_layer[ri].push_back(std::move(g.d_weight));
                per_layer[ri].push_back(std::move(g.d_bias));
                upstream = std::move(g.d_input);
                break;
            }
        }
    }

    for (auto& grads : per_layer) {
        for (auto& g : grads) result.grads.push_back(std::move(g));
    }
    result.input_grad = std::move(upstream);
    return result;
}

std::vector<ParamRef> Network::parameters() {
    std::vector<ParamRef> refs;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        Instance& inst = layers_[i];
        const std::string prefix = param_prefix(i);
        if (is_conv(inst.spec.kind)) {
            refs.push_back({prefix + ".filters", &inst.conv.filters});
            refs.push_back({prefix + ".biases", &inst.conv.biases});
        } else if (inst.spec.kind == LayerKind::Dense ||
                   inst.spec.kind == LayerKind::SoftmaxOut) {
            refs.push_back({prefix + ".weight", &inst.dense.weight});
            refs.push_back({prefix + ".bias", &inst.dense.bias});
        }
    }
    return refs;
}

std::vector<std::string> Network::parameter_names() const {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const Instance& inst = layers_[i];
        const std::string prefix = param_prefix(i);
        if (is_conv(inst.spec.kind)) {
            names.push_back(prefix + ".filters");
            names.push_back(prefix + ".biases");
        } else if (inst.spec.kind == LayerKind::Dense ||
                   inst.spec.kind == LayerKind::SoftmaxOut) {
            names.push_back(prefix + ".weight");
            names.push_back(prefix + ".bias");
        }
    }
    return names;
}

std::size_t Network::parameter_count() const {
    std::size_t count = 0;
    for (const auto& inst : layers_) {
        if (is_conv(inst.spec.kind)) {
            count += inst.conv.parameter_count();
        } else if (inst.spec.kind == LayerKind::Dense ||
                   inst.spec.kind == LayerKind::SoftmaxOut) {
            count += inst.dense.parameter_count();
        }
    }
    return count;
}

// ---------------------------------------------------------------------------
// Config text format

NetworkConfig parse_config(const std::string& text) {
    NetworkConfig config;
    config.layers.clear();
    bool saw_input = false;

    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string head;
        if (!(ls >> head)) continue;
        const std::string where = "line " + std::to_string(lineno);

        auto parse_kv = [&](std::map<std::string, std::string>& kv) {
            std::string tok;
            while (ls >> tok) {
                const auto eq = tok.find('=');
                if (eq == std::string::npos) {
                    throw ConfigError("expected key=value, got '" + tok + "' at " + where);
                }
                kv[tok.substr(0, eq)] = tok.substr(eq + 1);
            }
        };
        auto to_size = [&](const std::string& v) {
            std::size_t pos = 0;
            unsigned long long n = std::stoull(v, &pos);
            if (pos != v.size()) throw ConfigError("bad integer '" + v + "' at " + where);
            return static_cast<std::size_t>(n);
        };

        if (head == "input") {
            std::string dims;
            ls >> dims;
            std::size_t f = 0, t = 0, m = 0;
            if (std::sscanf(dims.c_str(), "%zux%zux%zu", &f, &t, &m) != 3) {
                throw ConfigError("bad input shape '" + dims + "' at " + where);
            }
            config.input_shape = Shape(f, t, m);
            saw_input = true;
        } else if (head == "seed") {
            std::string v;
            ls >> v;
            config.seed = std::stoull(v);
        } else if (head == "weight_stddev") {
            ls >> config.weight_stddev;
        } else if (head == "bias_stddev") {
            ls >> config.bias_stddev;
        } else if (head == "layer") {
            std::string kind;
            if (!(ls >> kind)) throw ConfigError("missing layer kind at " + where);
            std::map<std::string, std::string> kv;
            parse_kv(kv);
            LayerSpec spec;
            auto take = [&](const char* key) -> std::optional<std::string> {
                auto it = kv.find(key);
                if (it == kv.end()) return std::nullopt;
                std::string v = it->second;
                kv.erase(it);
                return v;
            };
            auto require = [&](const char* key) {
                auto v = take(key);
                if (!v) {
                    throw ConfigError(std::string("layer ") + kind + " missing " + key +
                                      "= at " + where);
                }
                return *v;
            };
            if (kind == "conv_time" || kind == "conv_freq") {
                spec.kind =
                    kind == "conv_time" ? LayerKind::ConvTime : LayerKind::ConvFreq;
                spec.filter_height = to_size(require("M"));
                spec.filter_width = to_size(require("N"));
                spec.out_maps = to_size(require("K"));
                if (auto v = take("act")) spec.activation = parse_activation(*v, where);
            } else if (kind == "relu") {
                spec.kind = LayerKind::ReLU;
            } else if (kind == "intramap_pool") {
                spec.kind = LayerKind::IntramapPool;
                spec.p = to_size(require("p"));
                spec.q = to_size(require("q"));
            } else if (kind == "intermap_pool") {
                spec.kind = LayerKind::IntermapPool;
                spec.r = to_size(require("r"));
                auto s = take("stride");
                spec.stride = s ? to_size(*s) : spec.r;
            } else if (kind == "dense" || kind == "softmax_out") {
                spec.kind = kind == "dense" ? LayerKind::Dense : LayerKind::SoftmaxOut;
                spec.units = to_size(require("units"));
                if (spec.kind == LayerKind::Dense) {
                    if (auto v = take("act")) {
                        spec.activation = parse_activation(*v, where);
                    }
                }
            } else {
                throw ConfigError("unknown layer kind '" + kind + "' at " + where);
            }
            if (auto v = take("init_stddev")) spec.init_stddev_override = std::stod(*v);
            if (!kv.empty()) {
                throw ConfigError("unknown key '" + kv.begin()->first + "' for layer " +
                                  kind + " at " + where);
            }
            config.layers.push_back(spec);
        } else {
            throw ConfigError("unknown directive '" + head + "' at " + where);
        }
    }
    if (!saw_input && config.layers.empty()) {
        throw ConfigError("empty network config");
    }
    return config;
}

NetworkConfig load_config(const std::filesystem::path& path) {
    try {
        return parse_config(read_file_bytes(path));
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string serialize_config(const NetworkConfig& config) {
    std::ostringstream out;
    out << "input " << config.input_shape.str() << "\n";
    out << "seed " << config.seed << "\n";
    out << "weight_stddev " << format_double(config.weight_stddev) << "\n";
    out << "bias_stddev " << format_double(config.bias_stddev) << "\n";
    for (const LayerSpec& spec : config.layers) {
        out << "layer " << layer_kind_name(spec.kind);
        switch (spec.kind) {
            case LayerKind::ConvTime:
            case LayerKind::ConvFreq:
                out << " M=" << spec.filter_height << " N=" << spec.filter_width
                    << " K=" << spec.out_maps << " act=" << activation_name(spec.activation);
                break;
            case LayerKind::ReLU:
                break;
            case LayerKind::IntramapPool:
                out << " p=" << spec.p << " q=" << spec.q;
                break;
            case LayerKind::IntermapPool:
                out << " r=" << spec.r << " stride=" << spec.stride;
                break;
            case LayerKind::Dense:
                out << " units=" << spec.units
                    << " act=" << activation_name(spec.activation);
                break;
            case LayerKind::SoftmaxOut:
                out << " units=" << spec.units;
                break;
        }
        if (spec.init_stddev_override) {
            out << " init_stddev=" << format_double(*spec.init_stddev_override);
        }
        out << "\n";
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Presets

namespace {

LayerSpec conv_spec(LayerKind kind, std::size_t M, std::size_t N, std::size_t K,
                    std::optional<double> init_override = std::nullopt) {
    LayerSpec s;
    s.kind = kind;
    s.filter_height = M;
    s.filter_width = N;
    s.out_maps = K;
    s.activation = Activation::ReLU;
    s.init_stddev_override = init_override;
    return s;
}

LayerSpec intramap_spec(std::size_t p, std::size_t q) {
    LayerSpec s;
    s.kind = LayerKind::IntramapPool;
    s.p = p;
    s.q = q;
    return s;
}

LayerSpec intermap_spec(std::size_t r, std::size_t stride) {
    LayerSpec s;
    s.kind = LayerKind::IntermapPool;
    s.r = r;
    s.stride = stride;
    return s;
}

LayerSpec dense_spec(std::size_t units) {
    LayerSpec s;
    s.kind = LayerKind::Dense;
    s.units = units;
    s.activation = Activation::ReLU;
    return s;
}

LayerSpec softmax_spec(std::size_t classes) {
    LayerSpec s;
    s.kind = LayerKind::SoftmaxOut;
    s.units = classes;
    return s;
}

// The uniform N(0, 0.01) weight draw that works for wide nets over log-mel
// inputs leaves this depth bias-dominated at desk scale: forward activity
// is nearly input-independent and training stalls while the epoch gate
// halves the rate. Raising lower-layer stddevs is the documented remedy;
// the presets scale each weighted layer by sqrt(2 / fan_in).
void apply_fan_in_init(NetworkConfig& config) {
    Shape cur = config.input_shape;
    ShapePlan plan = infer_shapes(config);
    for (std::size_t i = 0; i < config.layers.size(); ++i) {
        LayerSpec& spec = config.layers[i];
        std::size_t fan_in = 0;
        if (spec.kind == LayerKind::ConvTime || spec.kind == LayerKind::ConvFreq) {
            fan_in = spec.filter_height * spec.filter_width * cur.maps;
        } else if (spec.kind == LayerKind::Dense || spec.kind == LayerKind::SoftmaxOut) {
            fan_in = cur.elements();
        }
        if (fan_in > 0) {
            spec.init_stddev_override = std::sqrt(2.0 / static_cast<double>(fan_in));
        }
        cur = plan.shapes[i];
    }
}

}  // namespace

std::vector<std::string> preset_names() {
    return {"cnn-toy-6L", "imp-toy", "impo-toy", "freq-toy"};
}

bool is_preset_name(const std::string& name) {
    auto names = preset_names();
    return std::find(names.begin(), names.end(), name) != names.end();
}

NetworkConfig preset(const std::string& name, std::size_t classes) {
    NetworkConfig c;
    c.input_shape = Shape(40, 21, 1);
    c.seed = 1;

    if (name == "imp-toy" || name == "impo-toy") {
        const std::size_t stride = name == "imp-toy" ? 4 : 1;
        c.layers = {
            conv_spec(LayerKind::ConvTime, 40, 5, 64),
            intermap_spec(4, stride),
            conv_spec(LayerKind::ConvTime, 1, 3, 32),
            conv_spec(LayerKind::ConvTime, 1, 3, 32),
            intramap_spec(1, 2),
            conv_spec(LayerKind::ConvTime, 1, 3, 48),
            conv_spec(LayerKind::ConvTime, 1, 3, 48),
            intramap_spec(1, 2),
            dense_spec(256),
            softmax_spec(classes),
        };
    } else if (name == "freq-toy") {
        // imp-toy transposed: the first filter spans the full time extent
        // and slides along frequency; inner filters and pools act on the
        // frequency axis. The dense width keeps the parameter budget level
        // with imp-toy (the frequency path flattens to 288 units, not 48).
        c.layers = {
            conv_spec(LayerKind::ConvFreq, 5, 21, 64),
            intermap_spec(4, 4),
            conv_spec(LayerKind::ConvFreq, 3, 1, 32),
            conv_spec(LayerKind::ConvFreq, 3, 1, 32),
            intramap_spec(2, 1),
            conv_spec(LayerKind::ConvFreq, 3, 1, 48),
            conv_spec(LayerKind::ConvFreq, 3, 1, 48),
            intramap_spec(2, 1),
            dense_spec(64),
            softmax_spec(classes),
        };
    } else if (name == "cnn-toy-6L") {
        // Matched no-IMP baseline: first-layer map count equals imp-toy's
        // post-pool count (16) so downstream shapes agree; the wider dense
        // stage returns the parameters removed from the first convolution
        // (within ~2% of imp-toy's total).
        c.layers = {
            conv_spec(LayerKind::ConvTime, 40, 5, 16),
            conv_spec(LayerKind::ConvTime, 1, 3, 32),
            conv_spec(LayerKind::ConvTime, 1, 3, 32),
            intramap_spec(1, 2),
            conv_spec(LayerKind::ConvTime, 1, 3, 48),
            conv_spec(LayerKind::ConvTime, 1, 3, 48),
            intramap_spec(1, 2),
            dense_spec(448),
            softmax_spec(classes),
        };
    } else {
        throw ConfigError("unknown preset '" + name + "'");
    }
    apply_fan_in_init(c);
    return c;
}

NetworkConfig reduced_preset(const std::string& name, std::size_t classes) {
    NetworkConfig c;
    c.input_shape = Shape(6, 9, 1);
    c.seed = 1;
    // Larger init keeps units active and gradients well-conditioned for
    // finite-difference comparison.
    c.weight_stddev = 0.3;
    c.bias_stddev = 0.1;

    if (name == "imp-toy" || name == "impo-toy") {
        const std::size_t stride = name == "imp-toy" ? 4 : 1;
        c.layers = {
            conv_spec(LayerKind::ConvTime, 6, 3, 8),
            intermap_spec(4, stride),
            conv_spec(LayerKind::ConvTime, 1, 3, 4),
            intramap_spec(1, 2),
            dense_spec(6),
            softmax_spec(classes),
        };
    } else if (name == "freq-toy") {
        c.layers = {
            conv_spec(LayerKind::ConvFreq, 3, 9, 8),
            intermap_spec(4, 4),
            conv_spec(LayerKind::ConvFreq, 3, 1, 4),
            intramap_spec(2, 1),
            dense_spec(6),
            softmax_spec(classes),
        };
    } else if (name == "cnn-toy-6L") {
        c.layers = {
            conv_spec(LayerKind::ConvTime, 6, 3, 4),
            conv_spec(LayerKind::ConvTime, 1, 3, 4),
            intramap_spec(1, 2),
            dense_spec(6),
            softmax_spec(classes),
        };
    } else {
        throw ConfigError("unknown preset '" + name + "'");
    }
    return c;
}

NetworkConfig resolve_config(const std::string& name_or_path) {
    if (is_preset_name(name_or_path)) return preset(name_or_path);
    return load_config(name_or_path);
}

// ---------------------------------------------------------------------------
// Snapshots

void save_snapshot(const std::filesystem::path& dir, Network& net) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    manifest["format"] = "impnet-snapshot";
    manifest["version"] = 1;
    manifest["config"] = serialize_config(net.config());
    manifest["params"] = net.parameter_names();
    write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
    for (const ParamRef& p : net.parameters()) {
        save_tensor(dir / (p.name + ".impt"), *p.value);
    }
}

Network load_snapshot(const std::filesystem::path& dir) {
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(read_file_bytes(dir / "manifest.json"));
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad snapshot manifest in " + dir.string() + ": " + e.what());
    }
    if (manifest.value("format", "") != "impnet-snapshot") {
        throw IoError("not an impnet snapshot: " + dir.string());
    }
    NetworkConfig config = parse_config(manifest.at("config").get<std::string>());
    Network net = build(config, InitMode::Zeros);

    std::vector<std::string> listed =
        manifest.at("params").get<std::vector<std::string>>();
    std::vector<ParamRef> params = net.parameters();
    if (listed.size() != params.size()) {
        throw IoError("snapshot manifest lists " + std::to_string(listed.size()) +
                      " params, network has " + std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (listed[i] != params[i].name) {
            throw IoError("snapshot param order mismatch: " + listed[i] + " vs " +
                          params[i].name);
        }
        Tensor loaded = load_tensor(dir / (params[i].name + ".impt"));
        if (loaded.shape() != params[i].value->shape()) {
            throw IoError("snapshot tensor " + params[i].name + " has shape " +
                          loaded.shape().str() + ", expected " +
                          params[i].value->shape().str());
        }
        *params[i].value = std::move(loaded);
    }
    return net;
}

}  // namespace impnet
