#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>

#include "impnet/io.hpp"
#include "impnet/synthdata.hpp"

using namespace impnet;
namespace fs = std::filesystem;

namespace {

const fs::path kGoldenDir = fs::path(IMPNET_SOURCE_DIR) / "data" / "golden";

}  // namespace

TEST_CASE("templates match the checked-in goldens") {
    const auto classes = default_classes();
    REQUIRE(classes.size() == 5);
    for (const auto& cls : classes) {
        const fs::path golden =
            kGoldenDir / ("class" + std::to_string(cls.id) + ".impt");
        REQUIRE_MESSAGE(fs::exists(golden), golden.string());
        CHECK(render_template(cls) == load_tensor(golden));
    }
}

TEST_CASE("render is deterministic and shifts exactly") {
    const auto classes = default_classes();
    for (const auto& cls : classes) {
        GaussianSource a(42, 0.0, 0.1), b(42, 0.0, 0.1);
        SynthSample sa = render(cls, 1, a);
        SynthSample sb = render(cls, 1, b);
        CHECK(sa.tensor == sb.tensor);
        CHECK(sa.label == cls.id);
        CHECK(sa.shift == 1);

        // Noise-free: shift +3 equals the unshifted render on the overlap.
        GaussianSource quiet(0, 0.0, 0.0);
        std::size_t clipped = 0;
        SynthSample s0 = render(cls, 0, quiet, &clipped);
        SynthSample s3 = render(cls, 3, quiet, &clipped);
        const Shape& shape = s0.tensor.shape();
        for (std::size_t t = 0; t < shape.time_steps; ++t) {
            for (std::size_t f = 3; f < shape.freq_bins; ++f) {
                CHECK(s3.tensor.at(f, t, 0) == s0.tensor.at(f - 3, t, 0));
            }
        }
    }
}

TEST_CASE("default templates survive max shifts without clipping") {
    GaussianSource quiet(0, 0.0, 0.0);
    for (const auto& cls : default_classes()) {
        for (int shift : {-5, 5}) {
            std::size_t clipped = 123;
            render(cls, shift, quiet, &clipped);
            CHECK(clipped == 0);
        }
    }
}

TEST_CASE("make_dataset stratification and shift contracts") {
    SynthSpec spec;
    spec.samples_per_class = 100;
    spec.test_samples_per_class = 40;
    spec.shift_range_train = 2;
    spec.shift_range_test = 5;
    spec.seed = 3;

    SynthDataset data = make_dataset(spec);
    CHECK(data.train.size() == 500);
    CHECK(data.validation.size() == 50);  // 10% of the train size
    CHECK(data.test.size() == 200);

    std::map<int, int> per_class;
    for (const auto& s : data.train) per_class[s.label] += 1;
    for (const auto& [label, count] : per_class) {
        (void)label;
        CHECK(count == 100);
    }

    for (const auto& s : data.train) CHECK(std::abs(s.shift) <= 2);
    for (const auto& s : data.validation) CHECK(std::abs(s.shift) <= 2);
    for (const auto& s : data.test) {
        CHECK(std::abs(s.shift) > 2);
        CHECK(std::abs(s.shift) <= 5);
    }

    // Deterministic regeneration.
    SynthDataset again = make_dataset(spec);
    REQUIRE(again.train.size() == data.train.size());
    for (std::size_t i = 0; i < data.train.size(); ++i) {
        CHECK(again.train[i].tensor == data.train[i].tensor);
    }
}

TEST_CASE("empty annulus is rejected") {
    SynthSpec spec;
    spec.shift_range_train = 2;
    spec.shift_range_test = 2;
    CHECK_THROWS_AS(make_dataset(spec), ConfigError);
}

TEST_CASE("synth spec text round trip") {
    SynthSpec spec;
    spec.seed = 77;
    spec.shift_range_train = 3;
    spec.shift_range_test = 6;
    spec.noise_stddev = 0.25;
    spec.samples_per_class = 12;
    spec.test_samples_per_class = 7;

    SynthSpec back = parse_synth_spec(serialize_synth_spec(spec));
    CHECK(back.seed == 77);
    CHECK(back.shift_range_train == 3);
    CHECK(back.shift_range_test == 6);
    CHECK(back.noise_stddev == 0.25);
    CHECK(back.samples_per_class == 12);
    CHECK(back.test_samples_per_class == 7);

    CHECK_THROWS_AS(parse_synth_spec("mystery 1\n"), ConfigError);
}

TEST_CASE("dataset directory round trip") {
    SynthSpec spec;
    spec.samples_per_class = 4;
    spec.test_samples_per_class = 2;
    SynthDataset data = make_dataset(spec);

    fs::path dir = fs::temp_directory_path() / "impnet_synth_test";
    fs::remove_all(dir);
    save_dataset(dir, spec, data);

    LabeledSamples train = load_split(dir, "train");
    CHECK(train.tensors.size() == 20);
    for (std::size_t i = 0; i < train.tensors.size(); ++i) {
        CHECK(train.tensors[i] == data.train[i].tensor);
        CHECK(train.labels[i] == data.train[i].label);
        CHECK(train.shifts[i] == data.train[i].shift);
    }
    LabeledSamples test = load_split(dir, "test");
    CHECK(test.tensors.size() == 10);

    SynthSpec reloaded = load_synth_spec(dir / "synth_spec.txt");
    CHECK(reloaded.samples_per_class == 4);
    fs::remove_all(dir);
}
