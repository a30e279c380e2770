#pragma once

#include <cstdint>
#include <string>

#include "impnet/model.hpp"

namespace impnet::cli {

// Stable exit-code contract.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitCheckFailed = 3;

struct FeaturesArgs {
    std::string wav_dir;
    std::string out_file;
    std::uint32_t sample_rate = 16000;
    bool mean_norm = false;
    std::string csv_dir;  // optional per-utterance CSV export
};
int run_features(const FeaturesArgs& args);

struct SynthArgs {
    std::string spec_file;  // empty -> built-in default spec
    std::string out_dir;
};
int run_synth(const SynthArgs& args);

struct TrainArgs {
    std::string config;  // preset name or config file path
    std::string data_dir;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;  // when false the config's seed is used
    std::size_t epochs = 50;
    std::size_t batch = 512;
    double lr = 0.01;
};
int run_train(const TrainArgs& args);

struct EvalArgs {
    std::string model_dir;
    std::string data_dir;
    std::string split = "test";
    std::string out_csv = "confusion.csv";
};
int run_eval(const EvalArgs& args);

struct GradcheckArgs {
    std::string config;   // preset name or config file path
    bool reduced = false; // map preset names through reduced_preset()
    std::size_t trials = 20;
    double eps = 1e-5;
    double tol = 1e-5;
    std::uint64_t seed = 99;
    bool inject_bug = false;  // corrupt analytic gradients (harness self-test)
};
int run_gradcheck(const GradcheckArgs& args);

struct GradcheckResult {
    std::size_t tested = 0;
    std::size_t skipped = 0;  // kink- or tie-adjacent coordinates
    double worst_rel_err = 0.0;
    bool pass = true;
};

// Compares analytic parameter and input gradients of the total loss against
// central finite differences, resampling coordinates whose evaluations sit
// within 1e-4 of a ReLU kink or a pooling tie. Enforces a 50,000 parameter
// cap.
GradcheckResult gradcheck_run(const NetworkConfig& config, const GradcheckArgs& args);

struct CompareArgs {
    std::string experiment;  // "axis" or "imp"
    std::string out_dir;
    std::size_t seeds = 5;
    std::size_t epochs = 50;
    std::size_t batch = 512;
    double lr = 0.01;
    std::string spec_file;    // synth spec; empty -> default
    bool keep_models = true;  // save per-run best snapshots under out/models
};
int run_compare(const CompareArgs& args);

struct CompareSummary {
    std::vector<std::string> variants;
    std::vector<double> median_train_acc;
    std::vector<double> median_test_acc;
    std::vector<std::size_t> param_counts;
};
CompareSummary run_compare_experiment(const CompareArgs& args);

struct AnalyzeArgs {
    std::string model_dir;
    std::string data_dir;  // synth dataset dir (for class templates)
    std::string out_dir;
    int max_shift = 0;  // 0 -> the dataset's test shift range
};
int run_analyze(const AnalyzeArgs& args);

}  // namespace impnet::cli
