#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "impnet/analysis.hpp"
#include "impnet/features.hpp"
#include "impnet/layers.hpp"
#include "impnet/model.hpp"
#include "impnet/random.hpp"
#include "impnet/synthdata.hpp"
#include "impnet/trainer.hpp"

namespace py = pybind11;
using namespace impnet;

namespace {

// Tensor <-> numpy. The (freq, time, maps) layout is frequency-fastest, so
// the numpy view uses strides (8, 8*F, 8*F*T).
py::array_t<double> tensor_to_numpy(const Tensor& t) {
    const Shape& s = t.shape();
    py::array_t<double> out(
        {s.freq_bins, s.time_steps, s.maps},
        {sizeof(double), sizeof(double) * s.freq_bins,
         sizeof(double) * s.freq_bins * s.time_steps});
    std::copy(t.data(), t.data() + t.size(), out.mutable_data());
    return out;
}

Tensor numpy_to_tensor(const py::array& arr) {
    py::array_t<double, py::array::forcecast> a(arr);
    if (a.ndim() != 3) {
        throw ShapeError("expected a rank-3 array (freq, time, maps)");
    }
    Tensor t(Shape(static_cast<std::size_t>(a.shape(0)),
                   static_cast<std::size_t>(a.shape(1)),
                   static_cast<std::size_t>(a.shape(2))));
    auto view = a.unchecked<3>();
    for (py::ssize_t m = 0; m < a.shape(2); ++m) {
        for (py::ssize_t ti = 0; ti < a.shape(1); ++ti) {
            for (py::ssize_t f = 0; f < a.shape(0); ++f) {
                t.at(static_cast<std::size_t>(f), static_cast<std::size_t>(ti),
                     static_cast<std::size_t>(m)) = view(f, ti, m);
            }
        }
    }
    return t;
}

LabeledSamples split_to_samples(const std::vector<SynthSample>& split) {
    LabeledSamples out;
    for (const auto& s : split) {
        out.tensors.push_back(s.tensor);
        out.labels.push_back(s.label);
        out.shifts.push_back(s.shift);
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_impnet, m) {
    m.doc() = "Time-axis CNN with intermap pooling: core kernels and training";

    py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_IOError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

    py::enum_<Activation>(m, "Activation")
        .value("ReLU", Activation::ReLU)
        .value("Identity", Activation::Identity);

    py::enum_<Mode>(m, "Mode").value("Train", Mode::Train).value("Eval", Mode::Eval);

    // --- kernels ------------------------------------------------------------

    m.def("conv_forward",
          [](const py::array& input, const py::array& filters,
             const py::array& biases, bool relu) {
              Tensor in = numpy_to_tensor(input);
              ConvLayer layer;
              Tensor f = numpy_to_tensor(filters);
              layer.filter_height = f.shape().freq_bins;
              layer.filter_width = f.shape().time_steps;
              layer.in_maps = in.shape().maps;
              if (f.shape().maps % layer.in_maps != 0) {
                  throw ShapeError("filter maps must be a multiple of input maps");
              }
              layer.out_maps = f.shape().maps / layer.in_maps;
              layer.activation = relu ? Activation::ReLU : Activation::Identity;
              layer.filters = std::move(f);
              layer.biases = Tensor(Shape(layer.out_maps, 1, 1));
              py::array_t<double, py::array::forcecast> b(biases);
              if (static_cast<std::size_t>(b.size()) != layer.out_maps) {
                  throw ShapeError("bias count must equal the output map count");
              }
              std::copy(b.data(), b.data() + b.size(), layer.biases.data());
              return tensor_to_numpy(conv_forward(in, layer));
          },
          py::arg("input"), py::arg("filters"), py::arg("biases"),
          py::arg("relu") = true,
          "Valid cross-correlation over (freq, time); filters are packed "
          "(M, N, G*K) with filter k in map slots [k*G, (k+1)*G).");

    m.def("intramap_pool",
          [](const py::array& input, std::size_t p, std::size_t q) {
              PoolResult res = intramap_pool_forward(numpy_to_tensor(input), {p, q});
              return tensor_to_numpy(res.output);
          },
          py::arg("input"), py::arg("p"), py::arg("q"),
          "Non-overlapping spatial max pooling.");

    m.def("intermap_pool",
          [](const py::array& input, std::size_t r, std::size_t stride) {
              PoolResult res =
                  intermap_pool_forward(numpy_to_tensor(input), {r, stride});
              return tensor_to_numpy(res.output);
          },
          py::arg("input"), py::arg("r"), py::arg("stride"),
          "Max across r consecutive maps; stride r disjoint, stride 1 overlapping.");

    m.def("softmax_xent", [](const std::vector<double>& logits, std::size_t label) {
        SoftmaxXent res = softmax_xent(logits, label);
        return py::make_tuple(res.loss, res.grad);
    });

    m.def("gaussian",
          [](std::uint64_t seed, double mean, double stddev, std::size_t count) {
              GaussianSource src(seed, mean, stddev);
              std::vector<double> out(count);
              for (double& v : out) v = src.sample();
              return out;
          },
          py::arg("seed"), py::arg("mean"), py::arg("stddev"), py::arg("count"),
          "Deterministic SplitMix64 + Box-Muller stream.");

    // --- model --------------------------------------------------------------

    py::class_<NetworkConfig>(m, "NetworkConfig")
        .def_property_readonly("seed", [](const NetworkConfig& c) { return c.seed; })
        .def_property_readonly("layer_count",
                               [](const NetworkConfig& c) { return c.layers.size(); })
        .def("with_seed",
             [](NetworkConfig c, std::uint64_t seed) {
                 c.seed = seed;
                 return c;
             })
        .def("__str__", [](const NetworkConfig& c) { return serialize_config(c); });

    m.def("preset", &preset, py::arg("name"), py::arg("classes") = 5);
    m.def("reduced_preset", &reduced_preset, py::arg("name"), py::arg("classes") = 3);
    m.def("preset_names", &preset_names);
    m.def("parse_config", &parse_config);

    m.def("infer_shapes", [](const NetworkConfig& config) {
        ShapePlan plan = infer_shapes(config);
        std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> shapes;
        for (const Shape& s : plan.shapes) {
            shapes.emplace_back(s.freq_bins, s.time_steps, s.maps);
        }
        return shapes;
    });

    py::class_<Network>(m, "Network")
        .def_property_readonly("parameter_count", &Network::parameter_count)
        .def_property_readonly("classes", &Network::classes)
        .def("forward",
             [](Network& net, const py::array& input) {
                 return net.forward(numpy_to_tensor(input), Mode::Eval);
             },
             py::arg("input"), "Class scores (softmax probabilities).")
        .def("layer_outputs", [](const Network& net, const py::array& input) {
            std::vector<py::array_t<double>> outs;
            for (const Tensor& t : net.forward_all(numpy_to_tensor(input))) {
                outs.push_back(tensor_to_numpy(t));
            }
            return outs;
        });

    m.def("build", [](const NetworkConfig& config) { return build(config); });
    m.def("load_snapshot", &load_snapshot, py::arg("dir"));
    m.def("save_snapshot",
          [](const std::filesystem::path& dir, Network& net) {
              save_snapshot(dir, net);
          },
          py::arg("dir"), py::arg("net"));

    // --- features -----------------------------------------------------------

    m.def("wav_to_log_mel",
          [](const std::filesystem::path& path, bool mean_normalize) {
              return tensor_to_numpy(wav_to_log_mel(path, mean_normalize));
          },
          py::arg("path"), py::arg("mean_normalize") = false);

    m.def("stack_context", [](const py::array& features) {
        std::vector<py::array_t<double>> out;
        for (const Tensor& t : stack_context(numpy_to_tensor(features))) {
            out.push_back(tensor_to_numpy(t));
        }
        return out;
    });

    m.def("hz_to_mel", &hz_to_mel);
    m.def("mel_to_hz", &mel_to_hz);

    // --- synthetic data and training ----------------------------------------

    py::class_<SynthSpec>(m, "SynthSpec")
        .def(py::init<>())
        .def_readwrite("shift_range_train", &SynthSpec::shift_range_train)
        .def_readwrite("shift_range_test", &SynthSpec::shift_range_test)
        .def_readwrite("noise_stddev", &SynthSpec::noise_stddev)
        .def_readwrite("samples_per_class", &SynthSpec::samples_per_class)
        .def_readwrite("test_samples_per_class", &SynthSpec::test_samples_per_class)
        .def_readwrite("seed", &SynthSpec::seed);

    m.def("render_class",
          [](int class_id, int shift, double noise_stddev, std::uint64_t seed) {
              const auto classes = default_classes();
              if (class_id < 0 || static_cast<std::size_t>(class_id) >= classes.size()) {
                  throw ShapeError("class id out of range");
              }
              GaussianSource noise(seed, 0.0, noise_stddev);
              return tensor_to_numpy(render(classes[class_id], shift, noise).tensor);
          },
          py::arg("class_id"), py::arg("shift") = 0, py::arg("noise_stddev") = 0.0,
          py::arg("seed") = 0);

    py::class_<TrainResult>(m, "TrainResult")
        .def_readonly("best_val_cost", &TrainResult::best_val_cost)
        .def_readonly("epochs_run", &TrainResult::epochs_run)
        .def_property_readonly("epoch_log", [](const TrainResult& r) {
            std::vector<py::dict> rows;
            for (const auto& rec : r.log) {
                py::dict row;
                row["epoch"] = rec.epoch;
                row["train_loss"] = rec.train_loss;
                row["val_cost"] = rec.val_cost;
                row["lr"] = rec.learning_rate;
                row["accepted"] = rec.accepted;
                rows.push_back(row);
            }
            return rows;
        });

    m.def("train_on_synth",
          [](const NetworkConfig& config, const SynthSpec& spec, std::size_t epochs,
             std::size_t batch, double lr, std::size_t threads) {
              SynthDataset data = make_dataset(spec);
              LabeledSamples train_set = split_to_samples(data.train);
              LabeledSamples val_set = split_to_samples(data.validation);
              LabeledSamples test_set = split_to_samples(data.test);
              Network net = build(config);
              TrainOptions opts;
              opts.seed = config.seed;
              opts.epochs = epochs;
              opts.batch_size = batch;
              opts.learning_rate = lr;
              opts.threads = threads;
              TrainResult result = train(net, train_set, val_set, opts);
              py::dict out;
              out["result"] = result;
              out["train_accuracy"] = accuracy(net, train_set, threads);
              out["test_accuracy_shifted"] = accuracy(net, test_set, threads);
              out["network"] = std::move(net);
              return out;
          },
          py::arg("config"), py::arg("spec") = SynthSpec{}, py::arg("epochs") = 50,
          py::arg("batch") = 512, py::arg("lr") = 0.01, py::arg("threads") = 1,
          "Generate the synthetic dataset, train with the epoch gate, and "
          "report train/shifted-test accuracy.");

    // --- analysis -----------------------------------------------------------

    m.def("group_coherence", [](const Network& net) {
        GroupCoherenceReport rep = group_coherence(net);
        py::dict out;
        out["within_mean"] = rep.within_mean;
        out["across_mean"] = rep.across_mean;
        out["gap"] = rep.gap;
        out["per_group"] = rep.per_group;
        return out;
    });

    m.def("shift_invariance",
          [](const Network& net, int max_shift) {
              InvarianceReport rep = shift_invariance(net, default_classes(), max_shift);
              py::dict out;
              out["shifts"] = rep.shifts;
              out["pre"] = rep.pre_mean;
              out["post"] = rep.post_mean;
              out["ratio"] = rep.ratio;
              return out;
          },
          py::arg("net"), py::arg("max_shift") = 5);
}
