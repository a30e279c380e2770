#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "impnet/random.hpp"
#include "impnet/tensor.hpp"

namespace impnet {

// Labeled synthetic 40x21 spectrogram patterns with controlled integer
// frequency shifts. The five template categories are frequency-localized
// spectrotemporal shapes that stay distinguishable under any in-range
// shift, so shift-robustness can be scored against ground truth.

enum class PatternKind {
    HarmonicNarrow,  // crisp 1-bin harmonic stack, low bands
    HarmonicBroad,   // thick harmonic bands, high region
    OnOffset,        // temporally gated block spanning several bands
    FormantGabor,    // smooth static ridge centered on one band
    FormantSweep,    // diagonal ridge (spectrotemporal modulation)
};

struct PatternClass {
    int id = 0;
    PatternKind kind = PatternKind::HarmonicNarrow;
    double base_band = 10.0;   // fundamental / center frequency bin
    double bandwidth = 1.0;    // line thickness (bins) or ridge sigma
    double spacing = 4.0;      // distance between harmonic lines
    int harmonics = 1;         // line count for harmonic kinds
    double sweep_slope = 0.0;  // bins per frame
    int onset_time = 0;        // first active frame
    int offset_time = 20;      // last active frame
};

std::vector<PatternClass> default_classes();

struct SynthSpec {
    std::vector<PatternClass> classes = default_classes();
    int shift_range_train = 2;    // train/val shifts drawn from [-s, s]
    int shift_range_test = 5;     // test magnitudes in (train, test]
    double noise_stddev = 0.1;
    std::size_t samples_per_class = 400;       // train split
    std::size_t test_samples_per_class = 100;  // test split
    std::uint64_t seed = 1;

    // Validation is a 10% -sized stratified holdout drawn from the training
    // shift distribution.
    std::size_t val_samples_per_class() const {
        return (samples_per_class + 9) / 10;
    }
};

// Scalar knobs of the spec as a flat text file (classes stay the default
// five).
SynthSpec parse_synth_spec(const std::string& text);
SynthSpec load_synth_spec(const std::filesystem::path& path);
std::string serialize_synth_spec(const SynthSpec& spec);

struct SynthSample {
    Tensor tensor;  // 40 x 21 x 1
    int label = 0;
    int shift = 0;
};

// The canonical (unshifted, noise-free) 40x21 template of a class.
Tensor render_template(const PatternClass& cls);

// Template translated along frequency by `shift` whole bins (rows shifted
// out of range are clipped and counted), plus i.i.d. noise from `noise`.
// Pass a zero-stddev source for a noise-free render.
SynthSample render(const PatternClass& cls, int shift, GaussianSource& noise,
                   std::size_t* clipped_cells = nullptr);

struct SynthDataset {
    std::vector<SynthSample> train;
    std::vector<SynthSample> validation;
    std::vector<SynthSample> test;
};

// Stratified splits with per-sample counter-derived RNG streams: train and
// validation shifts are uniform on [-s_tr, s_tr]; test shifts are uniform
// over the unseen annulus s_tr < |shift| <= s_te.
SynthDataset make_dataset(const SynthSpec& spec);

// Dataset directory layout: {train,val,test}.impa archives (ids
// "<split>_<index>"), matching *_labels.csv, and a synth_spec.txt copy.
void save_dataset(const std::filesystem::path& dir, const SynthSpec& spec,
                  const SynthDataset& data);

struct LabeledSamples {
    std::vector<Tensor> tensors;
    std::vector<int> labels;
    std::vector<int> shifts;
};

LabeledSamples load_split(const std::filesystem::path& dir, const std::string& split);

}  // namespace impnet
