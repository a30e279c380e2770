#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "impnet/tensor.hpp"

namespace impnet {

// Acoustic front-end: PCM16 mono WAV -> 25 ms Hamming STFT at 10 ms hop ->
// 40-band log-mel -> +/-10 frame context windows.

struct AudioBuffer {
    std::vector<double> samples;  // in [-1, 1]
    std::uint32_t sample_rate = 16000;
};

// RIFF/WAVE, PCM 16-bit mono only; samples scaled by 1/32768.
AudioBuffer read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const std::vector<std::int16_t>& samples,
               std::uint32_t sample_rate);

struct StftConfig {
    double window_ms = 25.0;
    double hop_ms = 10.0;
};

// Power spectrogram: one frame per 10 ms hop, Hamming-weighted, zero-padded
// to the next power of two, |X|^2 over bins 0..n_fft/2. Stored as a tensor
// of shape (n_fft/2 + 1, frames, 1).
struct PowerSpectrogram {
    Tensor power;          // (bins, frames, 1)
    std::size_t n_fft = 0;
    std::uint32_t sample_rate = 0;
};

PowerSpectrogram stft(const AudioBuffer& audio, const StftConfig& cfg = {});

// In-place radix-2 FFT; size must be a power of two.
void fft_pow2(std::vector<std::complex<double>>& data);

double hz_to_mel(double hz);   // 2595 * log10(1 + hz/700)
double mel_to_hz(double mel);

struct MelFilterbank {
    std::size_t n_filters = 40;
    std::size_t n_bins = 0;            // n_fft/2 + 1
    std::vector<double> weights;       // n_filters x n_bins, filter-major
    std::vector<double> center_hz;     // triangle peaks, strictly increasing

    double weight(std::size_t filter, std::size_t bin) const {
        return weights[filter * n_bins + bin];
    }
};

// Triangular filters with peaks uniformly spaced on the mel scale between
// 0 and Nyquist, peak weight 1 (no area normalization).
MelFilterbank mel_design(std::uint32_t sample_rate, std::size_t n_fft,
                         std::size_t n_filters = 40);

// Natural-log mel energies, floored at 1e-10 before the log; no energy
// coefficient. Shape (n_filters, frames, 1). Optional per-utterance mean
// normalization subtracts each band's mean over time.
Tensor log_mel(const PowerSpectrogram& spec, const MelFilterbank& bank,
               bool mean_normalize = false);

struct ContextWindow {
    std::size_t left = 10;
    std::size_t right = 10;

    std::size_t size() const { return left + right + 1; }
};

// One (bands x window x 1) tensor per input frame; out-of-range neighbors
// replicate the nearest edge frame.
std::vector<Tensor> stack_context(const Tensor& features, const ContextWindow& ctx = {});

// Whole pipeline for one file.
Tensor wav_to_log_mel(const std::filesystem::path& path, bool mean_normalize = false,
                      std::uint32_t expected_rate = 0);

}  // namespace impnet
