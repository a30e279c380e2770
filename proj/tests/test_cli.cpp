#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "impnet/cli.hpp"
#include "impnet/features.hpp"
#include "impnet/io.hpp"
#include "impnet/synthdata.hpp"

using namespace impnet;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    fs::path dir = fs::temp_directory_path() / ("impnet_cli_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string small_spec_text() {
    return "samples_per_class 12\n"
           "test_per_class 6\n"
           "seed 9\n";
}

}  // namespace

TEST_CASE("gradcheck passes on reduced presets and fails when corrupted") {
    cli::GradcheckArgs args;
    args.config = "imp-toy";
    args.reduced = true;
    args.trials = 10;

    CHECK(cli::run_gradcheck(args) == cli::kExitOk);

    args.inject_bug = true;
    CHECK(cli::run_gradcheck(args) == cli::kExitCheckFailed);

    args.inject_bug = false;
    args.trials = 0;  // vacuous pass with a warning
    CHECK(cli::run_gradcheck(args) == cli::kExitOk);
}

TEST_CASE("gradcheck enforces the parameter cap") {
    cli::GradcheckArgs args;
    args.config = "imp-toy";  // full preset: ~43k params, under the cap
    args.trials = 2;
    CHECK(cli::run_gradcheck(args) == cli::kExitOk);

    // A deliberately oversized dense layer trips the cap.
    fs::path dir = temp_dir("gradcap");
    {
        std::ofstream out(dir / "big.cfg");
        out << "input 40x21x1\n"
            << "layer dense units=100 act=relu\n"
            << "layer softmax_out units=100\n";  // 84k + 10k params
    }
    args.config = (dir / "big.cfg").string();
    CHECK_THROWS_AS(cli::run_gradcheck(args), ConfigError);
}

TEST_CASE("synth, train, eval, analyze pipeline") {
    fs::path root = temp_dir("pipeline");

    // synth
    {
        std::ofstream out(root / "spec.txt");
        out << small_spec_text();
    }
    cli::SynthArgs synth;
    synth.spec_file = (root / "spec.txt").string();
    synth.out_dir = (root / "data").string();
    CHECK(cli::run_synth(synth) == cli::kExitOk);
    CHECK(fs::exists(root / "data" / "train.impa"));
    CHECK(fs::exists(root / "data" / "val_labels.csv"));
    CHECK(fs::exists(root / "data" / "synth_spec.txt"));

    // train (tiny run)
    cli::TrainArgs train;
    train.config = "imp-toy";
    train.data_dir = (root / "data").string();
    train.out_dir = (root / "run").string();
    train.seed = 3;
    train.seed_set = true;
    train.epochs = 2;
    train.batch = 30;
    CHECK(cli::run_train(train) == cli::kExitOk);
    CHECK(fs::exists(root / "run" / "train_log.csv"));
    CHECK(fs::exists(root / "run" / "snapshot" / "manifest.json"));
    CHECK(fs::exists(root / "run" / "run_manifest.json"));

    // epochs echo in the log header; one row per epoch.
    {
        std::ifstream log(root / "run" / "train_log.csv");
        std::string all((std::istreambuf_iterator<char>(log)),
                        std::istreambuf_iterator<char>());
        CHECK(all.find("epochs=2") != std::string::npos);
        CHECK(all.find("\n1,") != std::string::npos);
        CHECK(all.find("\n2,") != std::string::npos);
    }

    // eval
    cli::EvalArgs eval;
    eval.model_dir = (root / "run").string();
    eval.data_dir = (root / "data").string();
    eval.out_csv = (root / "confusion.csv").string();
    CHECK(cli::run_eval(eval) == cli::kExitOk);
    {
        std::ifstream csv(root / "confusion.csv");
        std::string header;
        std::getline(csv, header);
        CHECK(header == "true_class,pred_0,pred_1,pred_2,pred_3,pred_4");
        std::size_t rows = 0;
        std::string line;
        while (std::getline(csv, line)) ++rows;
        CHECK(rows == 5);
    }

    // analyze
    cli::AnalyzeArgs analyze;
    analyze.model_dir = (root / "run").string();
    analyze.data_dir = (root / "data").string();
    analyze.out_dir = (root / "analysis").string();
    CHECK(cli::run_analyze(analyze) == cli::kExitOk);
    CHECK(fs::exists(root / "analysis" / "reports.jsonl"));
    // One PGM per first-layer filter.
    std::size_t pgms = 0;
    for (const auto& entry : fs::directory_iterator(root / "analysis" / "filters")) {
        if (entry.path().extension() == ".pgm") ++pgms;
    }
    CHECK(pgms == 64);

    fs::remove_all(root);
}

TEST_CASE("train run is reproducible byte for byte") {
    fs::path root = temp_dir("repro");
    {
        std::ofstream out(root / "spec.txt");
        out << small_spec_text();
    }
    cli::SynthArgs synth;
    synth.spec_file = (root / "spec.txt").string();
    synth.out_dir = (root / "data").string();
    cli::run_synth(synth);

    auto run = [&](const std::string& tag) {
        cli::TrainArgs train;
        train.config = "cnn-toy-6L";
        train.data_dir = (root / "data").string();
        train.out_dir = (root / tag).string();
        train.seed = 11;
        train.seed_set = true;
        train.epochs = 2;
        train.batch = 25;
        cli::run_train(train);
    };
    run("a");
    run("b");

    CHECK(read_file_bytes(root / "a" / "train_log.csv") ==
          read_file_bytes(root / "b" / "train_log.csv"));
    for (const auto& entry : fs::directory_iterator(root / "a" / "snapshot")) {
        const fs::path other = root / "b" / "snapshot" / entry.path().filename();
        CHECK(read_file_bytes(entry.path()) == read_file_bytes(other));
    }
    fs::remove_all(root);
}

TEST_CASE("eval on a non-imp model still works; analyze reports the mismatch") {
    fs::path root = temp_dir("noimp");
    {
        std::ofstream out(root / "spec.txt");
        out << small_spec_text();
    }
    cli::SynthArgs synth;
    synth.spec_file = (root / "spec.txt").string();
    synth.out_dir = (root / "data").string();
    cli::run_synth(synth);

    cli::TrainArgs train;
    train.config = "cnn-toy-6L";  // no intermap pool
    train.data_dir = (root / "data").string();
    train.out_dir = (root / "run").string();
    train.epochs = 1;
    train.batch = 30;
    cli::run_train(train);

    cli::AnalyzeArgs analyze;
    analyze.model_dir = (root / "run").string();
    analyze.data_dir = (root / "data").string();
    analyze.out_dir = (root / "analysis").string();
    CHECK(cli::run_analyze(analyze) == cli::kExitData);
    // Filter export still happened.
    CHECK(fs::exists(root / "analysis" / "filters" / "L01_g00_m00.pgm"));
    fs::remove_all(root);
}

TEST_CASE("features command writes a keyed archive") {
    fs::path root = temp_dir("features");
    fs::create_directories(root / "wavs");
    // Two short deterministic tones.
    for (int i = 0; i < 2; ++i) {
        std::vector<std::int16_t> samples(8000);
        for (std::size_t n = 0; n < samples.size(); ++n) {
            samples[n] = static_cast<std::int16_t>(
                8000.0 * std::sin(2.0 * M_PI * (500.0 + 300.0 * i) *
                                  static_cast<double>(n) / 16000.0));
        }
        write_wav(root / "wavs" / ("utt" + std::to_string(i) + ".wav"), samples, 16000);
    }

    cli::FeaturesArgs args;
    args.wav_dir = (root / "wavs").string();
    args.out_file = (root / "feats.impa").string();
    args.csv_dir = (root / "csv").string();
    CHECK(cli::run_features(args) == cli::kExitOk);

    auto records = load_archive(root / "feats.impa");
    REQUIRE(records.size() == 2);
    CHECK(records[0].id == "utt0");
    CHECK(records[1].id == "utt1");
    CHECK(records[0].tensor.shape().freq_bins == 40);
    CHECK(fs::exists(root / "csv" / "utt0.csv"));

    // Re-running produces byte-identical output.
    const std::string first = read_file_bytes(root / "feats.impa");
    cli::run_features(args);
    CHECK(read_file_bytes(root / "feats.impa") == first);
    fs::remove_all(root);
}

TEST_CASE("compare rejects unknown experiments and zero seeds") {
    cli::CompareArgs args;
    args.experiment = "upside-down";
    args.out_dir = (fs::temp_directory_path() / "impnet_cli_badcmp").string();
    CHECK_THROWS_AS(cli::run_compare_experiment(args), ConfigError);
    args.experiment = "imp";
    args.seeds = 0;
    CHECK_THROWS_AS(cli::run_compare_experiment(args), ConfigError);
}
