#include "impnet/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "impnet/analysis.hpp"
#include "impnet/features.hpp"
#include "impnet/io.hpp"
#include "impnet/random.hpp"
#include "impnet/synthdata.hpp"
#include "impnet/trainer.hpp"

namespace impnet::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kGradcheckParamCap = 50000;
constexpr double kKinkTolerance = 1e-4;

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(
        std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

double median(std::vector<double> values) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    return values.size() % 2 == 1 ? values[mid]
                                  : 0.5 * (values[mid - 1] + values[mid]);
}

NetworkConfig resolve_train_config(const std::string& name_or_path,
                                   std::string* hash_out) {
    if (is_preset_name(name_or_path)) {
        NetworkConfig config = preset(name_or_path);
        if (hash_out) *hash_out = git_blob_sha1(serialize_config(config));
        return config;
    }
    if (hash_out) *hash_out = git_blob_sha1(read_file_bytes(name_or_path));
    return load_config(name_or_path);
}

}  // namespace

int run_features(const FeaturesArgs& args) {
    std::vector<fs::path> wavs;
    for (const auto& entry : fs::directory_iterator(args.wav_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".wav") {
            wavs.push_back(entry.path());
        }
    }
    if (wavs.empty()) throw IoError("no .wav files in " + args.wav_dir);
    std::sort(wavs.begin(), wavs.end());

    std::vector<ArchiveRecord> records;
    records.reserve(wavs.size());
    for (const auto& path : wavs) {
        Tensor feats = wav_to_log_mel(path, args.mean_norm, args.sample_rate);
        const std::string id = path.stem().string();
        if (!args.csv_dir.empty()) {
            fs::create_directories(args.csv_dir);
            export_tensor_csv(fs::path(args.csv_dir) / (id + ".csv"), feats);
        }
        records.push_back({id, std::move(feats)});
    }
    save_archive(args.out_file, records);
    std::cout << "wrote " << records.size() << " utterances to " << args.out_file
              << "\n";
    return kExitOk;
}

int run_synth(const SynthArgs& args) {
    SynthSpec spec =
        args.spec_file.empty() ? SynthSpec{} : load_synth_spec(args.spec_file);
    SynthDataset data = make_dataset(spec);
    save_dataset(args.out_dir, spec, data);
    std::cout << "wrote " << data.train.size() << " train / " << data.validation.size()
              << " val / " << data.test.size() << " test samples to " << args.out_dir
              << "\n";
    return kExitOk;
}

int run_train(const TrainArgs& args) {
    const std::string started = utc_timestamp();

    std::string config_hash;
    NetworkConfig config = resolve_train_config(args.config, &config_hash);
    if (args.seed_set) config.seed = args.seed;

    TrainOptions opts;
    opts.seed = config.seed;
    opts.epochs = args.epochs;
    opts.batch_size = args.batch;
    opts.learning_rate = args.lr;
    opts.threads = env_thread_count();

    const fs::path data_dir(args.data_dir);
    LabeledSamples train_set = load_split(data_dir, "train");
    LabeledSamples val_set = load_split(data_dir, "val");

    Network net = build(config);
    TrainResult result = train(net, train_set, val_set, opts);

    const fs::path out_dir(args.out_dir);
    fs::create_directories(out_dir);
    write_file_atomic(out_dir / "train_log.csv", epoch_log_csv(opts, result.log));
    save_snapshot(out_dir / "snapshot", net);

    const double train_acc = accuracy(net, train_set, opts.threads);

    nlohmann::json manifest;
    manifest["config_path"] = args.config;
    manifest["config_hash"] = config_hash;
    manifest["data_path"] = args.data_dir;
    manifest["seed"] = config.seed;
    manifest["epochs"] = opts.epochs;
    manifest["batch"] = opts.batch_size;
    manifest["lr"] = opts.learning_rate;
    manifest["threads"] = opts.threads;
    manifest["started_utc"] = started;
    manifest["finished_utc"] = utc_timestamp();
    manifest["final"]["epochs_run"] = result.epochs_run;
    manifest["final"]["best_val_cost"] = result.best_val_cost;
    manifest["final"]["train_accuracy"] = train_acc;
    write_file_atomic(out_dir / "run_manifest.json", manifest.dump(2) + "\n");

    std::cout << "trained " << result.epochs_run << " epochs, best val cost "
              << format_double(result.best_val_cost) << ", train accuracy "
              << format_double(train_acc) << "\n";
    return kExitOk;
}

int run_eval(const EvalArgs& args) {
    Network net = load_snapshot(fs::path(args.model_dir) / "snapshot");
    LabeledSamples set = load_split(args.data_dir, args.split);
    const std::size_t threads = env_thread_count();

    const auto confusion = confusion_matrix(net, set, threads);
    const std::size_t classes = net.classes();
    std::size_t hits = 0;
    for (std::size_t c = 0; c < classes; ++c) hits += confusion[c * classes + c];
    const double acc = static_cast<double>(hits) / static_cast<double>(set.tensors.size());

    std::ostringstream csv;
    csv << "true_class";
    for (std::size_t p = 0; p < classes; ++p) csv << ",pred_" << p;
    csv << "\n";
    for (std::size_t c = 0; c < classes; ++c) {
        csv << c;
        for (std::size_t p = 0; p < classes; ++p) csv << "," << confusion[c * classes + p];
        csv << "\n";
    }
    write_file_atomic(args.out_csv, csv.str());

    std::cout << "accuracy " << format_double(acc) << " (" << hits << "/"
              << set.tensors.size() << "), confusion matrix in " << args.out_csv << "\n";
    return kExitOk;
}

// --------------------------------------------------------------------------
// Gradient checking

namespace {

struct EvalPoint {
    double loss = 0.0;
    ForwardStats stats;
};

EvalPoint evaluate(Network& net, const Tensor& input, std::size_t label) {
    EvalPoint point;
    net.forward(input, Mode::Train, &point.stats);
    point.loss = net.cached_loss(label);
    return point;
}

// Excludes coordinates whose +/-eps evaluations sit within 1e-4 of a ReLU
// kink or a live pooling tie (the margin moves by at most a few eps per
// step, so 1e-4 leaves an order of magnitude of headroom).
bool kink_adjacent(const EvalPoint& a, const EvalPoint& b) {
    return a.stats.min_relu_preact_abs < kKinkTolerance ||
           b.stats.min_relu_preact_abs < kKinkTolerance ||
           a.stats.min_pool_margin < kKinkTolerance ||
           b.stats.min_pool_margin < kKinkTolerance;
}

}  // namespace

GradcheckResult gradcheck_run(const NetworkConfig& config, const GradcheckArgs& args) {
    Network net = build(config);
    if (net.parameter_count() > kGradcheckParamCap) {
        throw ConfigError("gradcheck config has " +
                          std::to_string(net.parameter_count()) +
                          " parameters, cap is " + std::to_string(kGradcheckParamCap));
    }
    if (!net.has_softmax_out()) {
        throw ConfigError("gradcheck needs a softmax output layer");
    }

    SplitMix64 rng(derive_seed(args.seed, 0x6C));
    GaussianSource input_src(derive_seed(args.seed, 0x1F), 0.0, 1.0);
    Tensor input = gaussian_fill(config.input_shape, input_src);
    const std::size_t label = rng.next_u64() % net.classes();

    net.forward(input, Mode::Train);
    auto analytic = net.backward(label);
    if (args.inject_bug) {
        // Multiplicative plus additive corruption so every coordinate,
        // including zero gradients, is detectably wrong.
        for (auto& g : analytic.grads) {
            for (double& v : g.values()) v = v * 1.001 + 1e-3;
        }
        for (double& v : analytic.input_grad.values()) v = v * 1.001 + 1e-3;
    }

    auto params = net.parameters();
    std::vector<std::size_t> param_sizes;
    std::size_t total_coords = 0;
    for (const auto& p : params) {
        param_sizes.push_back(p.value->size());
        total_coords += p.value->size();
    }
    const std::size_t input_base = total_coords;
    total_coords += input.size();

    GradcheckResult result;
    const std::size_t max_attempts = std::max<std::size_t>(args.trials * 50, 1000);
    std::size_t attempts = 0;

    while (result.tested < args.trials && attempts < max_attempts) {
        ++attempts;
        const std::size_t coord = rng.next_u64() % total_coords;

        double* slot = nullptr;
        double analytic_grad = 0.0;
        if (coord >= input_base) {
            slot = &input.values()[coord - input_base];
            analytic_grad = analytic.input_grad.values()[coord - input_base];
        } else {
            std::size_t k = 0, offset = coord;
            while (offset >= param_sizes[k]) {
                offset -= param_sizes[k];
                ++k;
            }
            slot = &params[k].value->values()[offset];
            analytic_grad = analytic.grads[k].values()[offset];
        }

        const double saved = *slot;
        *slot = saved + args.eps;
        EvalPoint plus = evaluate(net, input, label);
        *slot = saved - args.eps;
        EvalPoint minus = evaluate(net, input, label);
        *slot = saved;

        if (kink_adjacent(plus, minus)) {
            ++result.skipped;
            continue;
        }

        const double fd = (plus.loss - minus.loss) / (2.0 * args.eps);
        const double rel = std::fabs(fd - analytic_grad) /
                           std::max({std::fabs(fd), std::fabs(analytic_grad), 1e-6});
        result.worst_rel_err = std::max(result.worst_rel_err, rel);
        if (rel > args.tol) result.pass = false;
        ++result.tested;
    }

    if (args.trials == 0) {
        std::cerr << "impnet: warning: --trials 0, gradcheck passes vacuously\n";
    } else if (result.tested < args.trials) {
        std::cerr << "impnet: warning: only " << result.tested << " of " << args.trials
                  << " requested coordinates were testable (rest kink-adjacent)\n";
    }
    return result;
}

int run_gradcheck(const GradcheckArgs& args) {
    NetworkConfig config;
    if (is_preset_name(args.config)) {
        config = args.reduced ? reduced_preset(args.config) : preset(args.config);
    } else {
        config = load_config(args.config);
    }

    GradcheckResult result = gradcheck_run(config, args);
    std::cout << "gradcheck: tested " << result.tested << " coordinates, skipped "
              << result.skipped << " kink-adjacent, worst rel err "
              << format_double(result.worst_rel_err) << "\n";
    if (result.pass) {
        std::cout << "PASS (tolerance " << format_double(args.tol) << ")\n";
        return kExitOk;
    }
    std::cout << "FAIL (tolerance " << format_double(args.tol) << ")\n";
    return kExitCheckFailed;
}

// --------------------------------------------------------------------------
// Comparison experiments

CompareSummary run_compare_experiment(const CompareArgs& args) {
    std::vector<std::string> variants;
    if (args.experiment == "axis") {
        variants = {"imp-toy", "freq-toy"};
    } else if (args.experiment == "imp") {
        variants = {"imp-toy", "cnn-toy-6L"};
    } else {
        throw ConfigError("unknown experiment '" + args.experiment +
                          "' (expected axis or imp)");
    }
    if (args.seeds == 0) throw ConfigError("compare needs at least one seed");

    const SynthSpec base_spec =
        args.spec_file.empty() ? SynthSpec{} : load_synth_spec(args.spec_file);

    // Preset construction keeps paired parameter budgets within 10%.
    std::vector<std::size_t> param_counts;
    for (const auto& v : variants) {
        param_counts.push_back(build(preset(v), InitMode::Zeros).parameter_count());
    }
    const double ratio = static_cast<double>(std::max(param_counts[0], param_counts[1])) /
                         static_cast<double>(std::min(param_counts[0], param_counts[1]));
    if (ratio > 1.10) {
        throw ConfigError("compare pair parameter counts differ by more than 10%: " +
                          std::to_string(param_counts[0]) + " vs " +
                          std::to_string(param_counts[1]));
    }

    const fs::path out_dir(args.out_dir);
    fs::create_directories(out_dir);

    std::ostringstream csv;
    csv << "seed,variant,train_acc,test_acc_shifted\n";

    std::vector<std::vector<double>> train_accs(variants.size());
    std::vector<std::vector<double>> test_accs(variants.size());

    for (std::size_t s = 0; s < args.seeds; ++s) {
        SynthSpec spec = base_spec;
        spec.seed = derive_seed(base_spec.seed, 0xDA7A0000ULL + s);
        SynthDataset data = make_dataset(spec);

        LabeledSamples train_set, val_set, test_set;
        for (auto* pair : {&data.train}) {
            for (auto& sample : *pair) {
                train_set.tensors.push_back(sample.tensor);
                train_set.labels.push_back(sample.label);
                train_set.shifts.push_back(sample.shift);
            }
        }
        for (auto& sample : data.validation) {
            val_set.tensors.push_back(sample.tensor);
            val_set.labels.push_back(sample.label);
            val_set.shifts.push_back(sample.shift);
        }
        for (auto& sample : data.test) {
            test_set.tensors.push_back(sample.tensor);
            test_set.labels.push_back(sample.label);
            test_set.shifts.push_back(sample.shift);
        }

        for (std::size_t v = 0; v < variants.size(); ++v) {
            NetworkConfig config = preset(variants[v]);
            config.seed = derive_seed(0xC0FFEE00ULL + s, v);

            TrainOptions opts;
            opts.seed = config.seed;
            opts.epochs = args.epochs;
            opts.batch_size = args.batch;
            opts.learning_rate = args.lr;
            opts.threads = env_thread_count();

            Network net = build(config);
            train(net, train_set, val_set, opts);

            const double train_acc = accuracy(net, train_set, opts.threads);
            const double test_acc = accuracy(net, test_set, opts.threads);
            train_accs[v].push_back(train_acc);
            test_accs[v].push_back(test_acc);

            csv << s << "," << variants[v] << "," << format_double(train_acc) << ","
                << format_double(test_acc) << "\n";
            std::cout << "seed " << s << " " << variants[v] << ": train "
                      << format_double(train_acc) << ", shifted test "
                      << format_double(test_acc) << "\n";

            if (args.keep_models) {
                save_snapshot(out_dir / "models" /
                                  (variants[v] + "_seed" + std::to_string(s)),
                              net);
            }
        }
    }

    write_file_atomic(out_dir / "results.csv", csv.str());

    CompareSummary summary;
    summary.variants = variants;
    summary.param_counts = param_counts;
    for (std::size_t v = 0; v < variants.size(); ++v) {
        summary.median_train_acc.push_back(median(train_accs[v]));
        summary.median_test_acc.push_back(median(test_accs[v]));
    }

    nlohmann::json js;
    js["experiment"] = args.experiment;
    js["seeds"] = args.seeds;
    js["epochs"] = args.epochs;
    for (std::size_t v = 0; v < variants.size(); ++v) {
        js["variants"][variants[v]]["param_count"] = param_counts[v];
        js["variants"][variants[v]]["median_train_acc"] = summary.median_train_acc[v];
        js["variants"][variants[v]]["median_test_acc_shifted"] =
            summary.median_test_acc[v];
    }
    write_file_atomic(out_dir / "summary.json", js.dump(2) + "\n");
    return summary;
}

int run_compare(const CompareArgs& args) {
    CompareSummary summary = run_compare_experiment(args);
    for (std::size_t v = 0; v < summary.variants.size(); ++v) {
        std::cout << summary.variants[v] << ": median shifted test accuracy "
                  << format_double(summary.median_test_acc[v]) << " ("
                  << summary.param_counts[v] << " params)\n";
    }
    return kExitOk;
}

int run_analyze(const AnalyzeArgs& args) {
    Network net = load_snapshot(fs::path(args.model_dir) / "snapshot");
    const fs::path out_dir(args.out_dir);
    fs::create_directories(out_dir);

    const std::size_t n_filters = export_filters(net, 0, out_dir / "filters");
    std::cout << "exported " << n_filters << " first-layer filters\n";

    SynthSpec spec = load_synth_spec(fs::path(args.data_dir) / "synth_spec.txt");
    const int max_shift = args.max_shift > 0 ? args.max_shift : spec.shift_range_test;

    std::optional<GroupCoherenceReport> coherence;
    std::optional<InvarianceReport> invariance;
    try {
        coherence = group_coherence(net);
        invariance = shift_invariance(net, spec.classes, max_shift);
    } catch (const ShapeError& e) {
        write_reports_jsonl(out_dir / "reports.jsonl", coherence, invariance);
        std::cerr << "impnet: error: " << e.what() << "\n";
        return kExitData;
    }

    write_reports_jsonl(out_dir / "reports.jsonl", coherence, invariance);
    std::cout << "coherence gap " << format_double(coherence->gap) << " (within "
              << format_double(coherence->within_mean) << ", across "
              << format_double(coherence->across_mean) << ")\n";
    for (std::size_t i = 0; i < invariance->shifts.size(); ++i) {
        std::cout << "shift " << invariance->shifts[i] << ": post/pre ratio "
                  << format_double(invariance->ratio[i]) << "\n";
    }
    return kExitOk;
}

}  // namespace impnet::cli
