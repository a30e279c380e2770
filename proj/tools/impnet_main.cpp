#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "impnet/cli.hpp"
#include "impnet/error.hpp"

using namespace impnet;

int main(int argc, char** argv) {
    CLI::App app{"impnet: time-axis CNN with intermap pooling, desk scale"};
    app.require_subcommand(1);

    cli::FeaturesArgs features_args;
    auto* features = app.add_subcommand("features", "Extract log-mel features from WAVs");
    features->add_option("--wav-dir", features_args.wav_dir, "Directory of PCM16 mono WAVs")
        ->required();
    features->add_option("--out", features_args.out_file, "Output feature archive")
        ->required();
    features->add_option("--sample-rate", features_args.sample_rate,
                         "Expected sample rate (8000 or 16000)");
    features->add_flag("--mean-norm", features_args.mean_norm,
                       "Per-utterance mean normalization");
    features->add_option("--csv-dir", features_args.csv_dir,
                         "Also write one CSV per utterance here");

    cli::SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "Generate the synthetic shift dataset");
    synth->add_option("--spec", synth_args.spec_file, "Synth spec file (default spec if omitted)");
    synth->add_option("--out", synth_args.out_dir, "Output dataset directory")->required();

    cli::TrainArgs train_args;
    auto* train = app.add_subcommand("train", "Train a network on a synth dataset");
    train->add_option("--config", train_args.config, "Preset name or config file")
        ->required();
    train->add_option("--data", train_args.data_dir, "Dataset directory")->required();
    train->add_option("--out", train_args.out_dir, "Run output directory")->required();
    auto* seed_opt = train->add_option("--seed", train_args.seed, "Run seed (overrides config seed)");
    train->add_option("--epochs", train_args.epochs, "Max epochs (default 50)");
    train->add_option("--batch", train_args.batch, "Minibatch size (default 512)");
    train->add_option("--lr", train_args.lr, "Initial learning rate (default 0.01)");

    cli::EvalArgs eval_args;
    auto* eval = app.add_subcommand("eval", "Evaluate a snapshot on a dataset split");
    eval->add_option("--model", eval_args.model_dir, "Training run directory")->required();
    eval->add_option("--data", eval_args.data_dir, "Dataset directory")->required();
    eval->add_option("--split", eval_args.split, "Split name (default test)");
    eval->add_option("--out", eval_args.out_csv, "Confusion matrix CSV path");

    cli::GradcheckArgs grad_args;
    auto* gradcheck = app.add_subcommand("gradcheck",
                                         "Finite-difference gradient verification");
    gradcheck->add_option("--config", grad_args.config, "Preset name or config file")
        ->required();
    gradcheck->add_flag("--reduced", grad_args.reduced,
                        "Use the reduced variant of a preset");
    gradcheck->add_option("--trials", grad_args.trials, "Coordinates to test (default 20)");
    gradcheck->add_option("--eps", grad_args.eps, "Central-difference step (default 1e-5)");
    gradcheck->add_option("--tol", grad_args.tol, "Relative error tolerance (default 1e-5)");
    gradcheck->add_option("--seed", grad_args.seed, "Sampling seed");
    gradcheck->add_flag("--inject-bug", grad_args.inject_bug,
                        "Corrupt analytic gradients (harness self-test)");

    cli::CompareArgs compare_args;
    auto* compare = app.add_subcommand("compare", "Matched-budget architecture comparison");
    compare->add_option("--experiment", compare_args.experiment, "axis or imp")
        ->required();
    compare->add_option("--out", compare_args.out_dir, "Output directory")->required();
    compare->add_option("--seeds", compare_args.seeds, "Seeds per variant (default 5)");
    compare->add_option("--epochs", compare_args.epochs, "Epochs per run (default 50)");
    compare->add_option("--batch", compare_args.batch, "Minibatch size (default 512)");
    compare->add_option("--lr", compare_args.lr, "Initial learning rate (default 0.01)");
    compare->add_option("--spec", compare_args.spec_file, "Synth spec file override");
    compare->add_flag("!--no-models", compare_args.keep_models,
                      "Do not save per-run snapshots");

    cli::AnalyzeArgs analyze_args;
    auto* analyze = app.add_subcommand("analyze",
                                       "Filter coherence, shift invariance, filter export");
    analyze->add_option("--model", analyze_args.model_dir, "Training run directory")
        ->required();
    analyze->add_option("--data", analyze_args.data_dir, "Dataset directory")->required();
    analyze->add_option("--out", analyze_args.out_dir, "Output directory")->required();
    analyze->add_option("--max-shift", analyze_args.max_shift,
                        "Max shift magnitude (default: dataset test range)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return cli::kExitUsage;
    }

    try {
        if (*features) return cli::run_features(features_args);
        if (*synth) return cli::run_synth(synth_args);
        if (*train) {
            train_args.seed_set = seed_opt->count() > 0;
            return cli::run_train(train_args);
        }
        if (*eval) return cli::run_eval(eval_args);
        if (*gradcheck) return cli::run_gradcheck(grad_args);
        if (*compare) return cli::run_compare(compare_args);
        if (*analyze) return cli::run_analyze(analyze_args);
    } catch (const std::exception& e) {
        std::cerr << "impnet: error: " << e.what() << "\n";
        return cli::kExitData;
    }
    return cli::kExitUsage;
}
