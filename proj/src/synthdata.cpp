#include "impnet/synthdata.hpp"

#include <cmath>
#include <iostream>
#include <map>
#include <sstream>

#include "impnet/io.hpp"

namespace impnet {

namespace {

constexpr std::size_t kFreqBins = 40;
constexpr std::size_t kTimeSteps = 21;

// Stream tags keep the three splits on disjoint per-sample streams.
constexpr std::uint64_t kSplitTag[3] = {0x7261696e00000000ULL, 0x76616c0000000000ULL,
                                        0x7465737400000000ULL};

std::uint64_t sample_seed(const SynthSpec& spec, int split, std::size_t cls,
                          std::size_t index) {
    const std::uint64_t tag =
        kSplitTag[split] ^ (static_cast<std::uint64_t>(cls) << 32) ^ index;
    return derive_seed(spec.seed, tag);
}

int uniform_int(SplitMix64& rng, int lo, int hi) {  // inclusive range
    const std::uint64_t n = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<int>(rng.next_u64() % n);
}

}  // namespace

std::vector<PatternClass> default_classes() {
    std::vector<PatternClass> classes(5);

    classes[0].id = 0;
    classes[0].kind = PatternKind::HarmonicNarrow;
    classes[0].base_band = 10;
    classes[0].bandwidth = 1;
    classes[0].spacing = 4;
    classes[0].harmonics = 3;

    classes[1].id = 1;
    classes[1].kind = PatternKind::HarmonicBroad;
    classes[1].base_band = 22;
    classes[1].bandwidth = 3;
    classes[1].spacing = 8;
    classes[1].harmonics = 2;

    classes[2].id = 2;
    classes[2].kind = PatternKind::OnOffset;
    classes[2].base_band = 12;
    classes[2].bandwidth = 15;
    classes[2].onset_time = 8;
    classes[2].offset_time = 14;

    classes[3].id = 3;
    classes[3].kind = PatternKind::FormantGabor;
    classes[3].base_band = 20;
    classes[3].bandwidth = 2;

    classes[4].id = 4;
    classes[4].kind = PatternKind::FormantSweep;
    classes[4].base_band = 14;
    classes[4].bandwidth = 1.2;
    classes[4].sweep_slope = 0.8;
    classes[4].onset_time = 2;
    classes[4].offset_time = 18;

    return classes;
}

Tensor render_template(const PatternClass& cls) {
    Tensor out(Shape(kFreqBins, kTimeSteps, 1));
    switch (cls.kind) {
        case PatternKind::HarmonicNarrow:
        case PatternKind::HarmonicBroad: {
            const int thickness = static_cast<int>(cls.bandwidth);
            for (int h = 0; h < cls.harmonics; ++h) {
                const int row0 = static_cast<int>(cls.base_band + h * cls.spacing);
                for (int d = 0; d < thickness; ++d) {
                    const int f = row0 + d;
                    if (f < 0 || f >= static_cast<int>(kFreqBins)) continue;
                    for (std::size_t t = 0; t < kTimeSteps; ++t) {
                        out.at(static_cast<std::size_t>(f), t, 0) = 1.0;
                    }
                }
            }
            break;
        }
        case PatternKind::OnOffset: {
            const int f0 = static_cast<int>(cls.base_band);
            const int f1 = f0 + static_cast<int>(cls.bandwidth) - 1;
            for (int f = f0; f <= f1 && f < static_cast<int>(kFreqBins); ++f) {
                for (int t = cls.onset_time;
                     t <= cls.offset_time && t < static_cast<int>(kTimeSteps); ++t) {
                    out.at(static_cast<std::size_t>(f), static_cast<std::size_t>(t), 0) =
                        1.0;
                }
            }
            break;
        }
        case PatternKind::FormantGabor: {
            for (std::size_t f = 0; f < kFreqBins; ++f) {
                const double d = (static_cast<double>(f) - cls.base_band) / cls.bandwidth;
                const double v = std::exp(-0.5 * d * d);
                if (v < 1e-4) continue;
                for (std::size_t t = 0; t < kTimeSteps; ++t) out.at(f, t, 0) = v;
            }
            break;
        }
        case PatternKind::FormantSweep: {
            for (int t = cls.onset_time; t <= cls.offset_time; ++t) {
                const double center =
                    cls.base_band + cls.sweep_slope * static_cast<double>(t - cls.onset_time);
                for (std::size_t f = 0; f < kFreqBins; ++f) {
                    const double d = (static_cast<double>(f) - center) / cls.bandwidth;
                    const double v = std::exp(-0.5 * d * d);
                    if (v < 1e-4) continue;
                    double& cell = out.at(f, static_cast<std::size_t>(t), 0);
                    cell = std::max(cell, v);
                }
            }
            break;
        }
    }
    return out;
}

SynthSample render(const PatternClass& cls, int shift, GaussianSource& noise,
                   std::size_t* clipped_cells) {
    const Tensor tmpl = render_template(cls);
    SynthSample sample;
    sample.label = cls.id;
    sample.shift = shift;
    sample.tensor = Tensor(Shape(kFreqBins, kTimeSteps, 1));

    std::size_t clipped = 0;
    for (std::size_t t = 0; t < kTimeSteps; ++t) {
        for (std::size_t f = 0; f < kFreqBins; ++f) {
            const double v = tmpl.at(f, t, 0);
            if (v == 0.0) continue;
            const int fs = static_cast<int>(f) + shift;
            if (fs < 0 || fs >= static_cast<int>(kFreqBins)) {
                ++clipped;
                continue;
            }
            sample.tensor.at(static_cast<std::size_t>(fs), t, 0) = v;
        }
    }
    if (clipped_cells) {
        *clipped_cells = clipped;
    } else if (clipped > 0) {
        std::cerr << "impnet: warning: class " << cls.id << " shift " << shift
                  << " clipped " << clipped << " cells at the frequency border\n";
    }

    // Noise is added after translation in linear (frequency-fastest) order.
    for (double& v : sample.tensor.values()) v += noise.sample();
    return sample;
}

SynthDataset make_dataset(const SynthSpec& spec) {
    if (spec.classes.empty()) throw ConfigError("synth spec has no classes");
    if (spec.shift_range_train < 0 || spec.shift_range_test <= spec.shift_range_train) {
        throw ConfigError(
            "test shift range must exceed train shift range (got train " +
            std::to_string(spec.shift_range_train) + ", test " +
            std::to_string(spec.shift_range_test) + ")");
    }

    SynthDataset data;
    const std::size_t counts[3] = {spec.samples_per_class, spec.val_samples_per_class(),
                                   spec.test_samples_per_class};
    std::vector<SynthSample>* splits[3] = {&data.train, &data.validation, &data.test};

    for (int split = 0; split < 3; ++split) {
        for (std::size_t c = 0; c < spec.classes.size(); ++c) {
            for (std::size_t i = 0; i < counts[split]; ++i) {
                SplitMix64 rng(sample_seed(spec, split, c, i));
                int shift;
                if (split < 2) {
                    shift = uniform_int(rng, -spec.shift_range_train,
                                        spec.shift_range_train);
                } else {
                    // Unseen annulus: magnitude in (s_tr, s_te], either sign.
                    const int magnitude = uniform_int(rng, spec.shift_range_train + 1,
                                                      spec.shift_range_test);
                    shift = (rng.next_u64() & 1) ? magnitude : -magnitude;
                }
                GaussianSource noise(rng.next_u64(), 0.0, spec.noise_stddev);
                splits[split]->push_back(render(spec.classes[c], shift, noise));
            }
        }
    }
    return data;
}

SynthSpec parse_synth_spec(const std::string& text) {
    SynthSpec spec;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        std::string value;
        if (!(ls >> value)) {
            throw ConfigError("missing value for '" + key + "' at line " +
                              std::to_string(lineno));
        }
        if (key == "seed") {
            spec.seed = std::stoull(value);
        } else if (key == "shift_train") {
            spec.shift_range_train = std::stoi(value);
        } else if (key == "shift_test") {
            spec.shift_range_test = std::stoi(value);
        } else if (key == "noise_stddev") {
            spec.noise_stddev = std::stod(value);
        } else if (key == "samples_per_class") {
            spec.samples_per_class = std::stoull(value);
        } else if (key == "test_per_class") {
            spec.test_samples_per_class = std::stoull(value);
        } else {
            throw ConfigError("unknown synth spec key '" + key + "' at line " +
                              std::to_string(lineno));
        }
    }
    return spec;
}

SynthSpec load_synth_spec(const std::filesystem::path& path) {
    try {
        return parse_synth_spec(read_file_bytes(path));
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string serialize_synth_spec(const SynthSpec& spec) {
    std::ostringstream out;
    out << "seed " << spec.seed << "\n";
    out << "shift_train " << spec.shift_range_train << "\n";
    out << "shift_test " << spec.shift_range_test << "\n";
    out << "noise_stddev " << format_double(spec.noise_stddev) << "\n";
    out << "samples_per_class " << spec.samples_per_class << "\n";
    out << "test_per_class " << spec.test_samples_per_class << "\n";
    return out.str();
}

void save_dataset(const std::filesystem::path& dir, const SynthSpec& spec,
                  const SynthDataset& data) {
    std::filesystem::create_directories(dir);
    const std::vector<SynthSample>* splits[3] = {&data.train, &data.validation,
                                                 &data.test};
    const char* names[3] = {"train", "val", "test"};
    for (int s = 0; s < 3; ++s) {
        std::vector<ArchiveRecord> records;
        std::vector<LabelRow> labels;
        records.reserve(splits[s]->size());
        for (std::size_t i = 0; i < splits[s]->size(); ++i) {
            const SynthSample& sample = (*splits[s])[i];
            char id[32];
            std::snprintf(id, sizeof id, "%s_%05zu", names[s], i);
            records.push_back({id, sample.tensor});
            labels.push_back({id, sample.label, sample.shift});
        }
        save_archive(dir / (std::string(names[s]) + ".impa"), records);
        save_labels_csv(dir / (std::string(names[s]) + "_labels.csv"), labels);
    }
    write_file_atomic(dir / "synth_spec.txt", serialize_synth_spec(spec));
}

LabeledSamples load_split(const std::filesystem::path& dir, const std::string& split) {
    auto records = load_archive(dir / (split + ".impa"));
    auto labels = load_labels_csv(dir / (split + "_labels.csv"));
    if (records.size() != labels.size()) {
        throw IoError("archive/labels size mismatch for split " + split + " in " +
                      dir.string());
    }
    LabeledSamples out;
    out.tensors.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].id != labels[i].id) {
            throw IoError("archive/labels id mismatch at row " + std::to_string(i) +
                          " for split " + split);
        }
        out.tensors.push_back(std::move(records[i].tensor));
        out.labels.push_back(labels[i].label);
        out.shifts.push_back(labels[i].shift);
    }
    return out;
}

}  // namespace impnet
