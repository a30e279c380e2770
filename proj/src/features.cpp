#include "impnet/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "impnet/io.hpp"

namespace impnet {

namespace {

constexpr double kLogFloor = 1e-10;

std::uint32_t read_le_u32(std::istream& in, const char* what) {
    std::uint32_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), 4)) {
        throw IoError(std::string("truncated WAV while reading ") + what);
    }
    return v;
}

std::uint16_t read_le_u16(std::istream& in, const char* what) {
    std::uint16_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), 2)) {
        throw IoError(std::string("truncated WAV while reading ") + what);
    }
    return v;
}

}  // namespace

AudioBuffer read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());

    char tag[4];
    if (!in.read(tag, 4) || std::memcmp(tag, "RIFF", 4) != 0) {
        throw IoError(path.string() + ": not a RIFF file");
    }
    read_le_u32(in, "RIFF size");
    if (!in.read(tag, 4) || std::memcmp(tag, "WAVE", 4) != 0) {
        throw IoError(path.string() + ": not a WAVE file");
    }

    AudioBuffer buf;
    bool have_fmt = false, have_data = false;
    std::uint16_t channels = 0, bits = 0, format = 0;

    while (in.read(tag, 4)) {
        std::uint32_t chunk_size = read_le_u32(in, "chunk size");
        if (std::memcmp(tag, "fmt ", 4) == 0) {
            format = read_le_u16(in, "format");
            channels = read_le_u16(in, "channels");
            buf.sample_rate = read_le_u32(in, "sample rate");
            read_le_u32(in, "byte rate");
            read_le_u16(in, "block align");
            bits = read_le_u16(in, "bits per sample");
            if (chunk_size > 16) in.seekg(chunk_size - 16, std::ios::cur);
            have_fmt = true;
        } else if (std::memcmp(tag, "data", 4) == 0) {
            if (!have_fmt) throw IoError(path.string() + ": data chunk before fmt");
            if (format != 1 || bits != 16) {
                throw IoError(path.string() + ": unsupported encoding (need PCM 16-bit)");
            }
            if (channels != 1) throw IoError(path.string() + ": non-mono");
            const std::size_t n = chunk_size / 2;
            std::vector<std::int16_t> raw(n);
            if (!in.read(reinterpret_cast<char*>(raw.data()),
                         static_cast<std::streamsize>(chunk_size))) {
                throw IoError(path.string() + ": truncated data chunk");
            }
            buf.samples.resize(n);
            for (std::size_t i = 0; i < n; ++i) buf.samples[i] = raw[i] / 32768.0;
            have_data = true;
        } else {
            // Skip unknown chunks (LIST, fact, ...), padded to even size.
            in.seekg(chunk_size + (chunk_size & 1), std::ios::cur);
        }
    }
    if (!have_data) throw IoError(path.string() + ": no data chunk");
    if (buf.sample_rate != 8000 && buf.sample_rate != 16000) {
        throw IoError(path.string() + ": sample rate " +
                      std::to_string(buf.sample_rate) + " not in {8000, 16000}");
    }
    return buf;
}

void write_wav(const std::filesystem::path& path, const std::vector<std::int16_t>& samples,
               std::uint32_t sample_rate) {
    std::string out;
    auto put_u32 = [&](std::uint32_t v) { out.append(reinterpret_cast<char*>(&v), 4); };
    auto put_u16 = [&](std::uint16_t v) { out.append(reinterpret_cast<char*>(&v), 2); };

    const std::uint32_t data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
    out += "RIFF";
    put_u32(36 + data_bytes);
    out += "WAVEfmt ";
    put_u32(16);
    put_u16(1);  // PCM
    put_u16(1);  // mono
    put_u32(sample_rate);
    put_u32(sample_rate * 2);
    put_u16(2);
    put_u16(16);
    out += "data";
    put_u32(data_bytes);
    out.append(reinterpret_cast<const char*>(samples.data()), data_bytes);
    write_file_atomic(path, out);
}

void fft_pow2(std::vector<std::complex<double>>& data) {
    const std::size_t n = data.size();
    if (n == 0 || (n & (n - 1)) != 0) {
        throw ShapeError("fft_pow2 size must be a power of two");
    }
    // Bit-reversal permutation.
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(data[i], data[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double angle = -2.0 * M_PI / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(angle), std::sin(angle));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = data[i + k];
                const std::complex<double> v = data[i + k + len / 2] * w;
                data[i + k] = u + v;
                data[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

PowerSpectrogram stft(const AudioBuffer& audio, const StftConfig& cfg) {
    const std::size_t window =
        static_cast<std::size_t>(audio.sample_rate * cfg.window_ms / 1000.0);
    const std::size_t hop =
        static_cast<std::size_t>(audio.sample_rate * cfg.hop_ms / 1000.0);
    if (window < 2 || hop == 0) throw ShapeError("stft window/hop too small");
    if (audio.samples.size() < window) {
        throw ShapeError("audio shorter than one analysis window (" +
                         std::to_string(audio.samples.size()) + " < " +
                         std::to_string(window) + " samples)");
    }

    const std::size_t n_fft = std::bit_ceil(window);
    const std::size_t n_bins = n_fft / 2 + 1;
    const std::size_t frames = (audio.samples.size() - window) / hop + 1;

    std::vector<double> hamming(window);
    for (std::size_t i = 0; i < window; ++i) {
        hamming[i] = 0.54 - 0.46 * std::cos(2.0 * M_PI * static_cast<double>(i) /
                                            static_cast<double>(window - 1));
    }

    PowerSpectrogram out;
    out.n_fft = n_fft;
    out.sample_rate = audio.sample_rate;
    out.power = Tensor(Shape(n_bins, frames, 1));

    std::vector<std::complex<double>> buf(n_fft);
    for (std::size_t fr = 0; fr < frames; ++fr) {
        const double* src = audio.samples.data() + fr * hop;
        for (std::size_t i = 0; i < window; ++i) buf[i] = src[i] * hamming[i];
        std::fill(buf.begin() + static_cast<std::ptrdiff_t>(window), buf.end(),
                  std::complex<double>(0.0, 0.0));
        fft_pow2(buf);
        for (std::size_t b = 0; b < n_bins; ++b) {
            out.power.at(b, fr, 0) = std::norm(buf[b]);
        }
    }
    return out;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank mel_design(std::uint32_t sample_rate, std::size_t n_fft,
                         std::size_t n_filters) {
    if (n_filters < 1) throw ShapeError("mel_design needs at least one filter");
    const std::size_t n_bins = n_fft / 2 + 1;
    const double nyquist = sample_rate / 2.0;

    // n_filters + 2 corner points, uniform on the mel scale.
    std::vector<double> corners(n_filters + 2);
    const double mel_max = hz_to_mel(nyquist);
    for (std::size_t i = 0; i < corners.size(); ++i) {
        corners[i] = mel_to_hz(mel_max * static_cast<double>(i) /
                               static_cast<double>(n_filters + 1));
    }

    MelFilterbank bank;
    bank.n_filters = n_filters;
    bank.n_bins = n_bins;
    bank.weights.assign(n_filters * n_bins, 0.0);
    bank.center_hz.resize(n_filters);

    for (std::size_t m = 0; m < n_filters; ++m) {
        const double lo = corners[m], center = corners[m + 1], hi = corners[m + 2];
        bank.center_hz[m] = center;
        double total = 0.0;
        for (std::size_t b = 0; b < n_bins; ++b) {
            const double f =
                static_cast<double>(b) * sample_rate / static_cast<double>(n_fft);
            double w = 0.0;
            if (f > lo && f < center) {
                w = (f - lo) / (center - lo);
            } else if (f == center) {
                w = 1.0;
            } else if (f > center && f < hi) {
                w = (hi - f) / (hi - center);
            }
            bank.weights[m * n_bins + b] = w;
            total += w;
        }
        if (total == 0.0) {
            throw ShapeError("mel filter " + std::to_string(m) +
                             " covers no FFT bin; reduce n_filters or raise n_fft");
        }
    }
    return bank;
}

Tensor log_mel(const PowerSpectrogram& spec, const MelFilterbank& bank,
               bool mean_normalize) {
    const Shape& s = spec.power.shape();
    if (s.freq_bins != bank.n_bins) {
        throw ShapeError("spectrogram has " + std::to_string(s.freq_bins) +
                         " bins, filterbank expects " + std::to_string(bank.n_bins));
    }
    Tensor out(Shape(bank.n_filters, s.time_steps, 1));
    for (std::size_t fr = 0; fr < s.time_steps; ++fr) {
        for (std::size_t m = 0; m < bank.n_filters; ++m) {
            double acc = 0.0;
            const double* w = bank.weights.data() + m * bank.n_bins;
            for (std::size_t b = 0; b < bank.n_bins; ++b) {
                acc += w[b] * spec.power.at(b, fr, 0);
            }
            out.at(m, fr, 0) = std::log(std::max(acc, kLogFloor));
        }
    }
    if (mean_normalize) {
        for (std::size_t m = 0; m < bank.n_filters; ++m) {
            double mean = 0.0;
            for (std::size_t fr = 0; fr < s.time_steps; ++fr) mean += out.at(m, fr, 0);
            mean /= static_cast<double>(s.time_steps);
            for (std::size_t fr = 0; fr < s.time_steps; ++fr) out.at(m, fr, 0) -= mean;
        }
    }
    check_finite(out, "log_mel output");
    return out;
}

std::vector<Tensor> stack_context(const Tensor& features, const ContextWindow& ctx) {
    const Shape& s = features.shape();
    if (s.time_steps < 1) throw ShapeError("stack_context on empty features");
    Tensor padded = pad_time_replicate(features, ctx.left, ctx.right);
    std::vector<Tensor> windows;
    windows.reserve(s.time_steps);
    for (std::size_t t = 0; t < s.time_steps; ++t) {
        windows.push_back(slice_time(padded, t, ctx.size()));
    }
    return windows;
}

Tensor wav_to_log_mel(const std::filesystem::path& path, bool mean_normalize,
                      std::uint32_t expected_rate) {
    AudioBuffer audio = read_wav(path);
    if (expected_rate != 0 && audio.sample_rate != expected_rate) {
        throw IoError(path.string() + ": sample rate " +
                      std::to_string(audio.sample_rate) + " != expected " +
                      std::to_string(expected_rate));
    }
    PowerSpectrogram spec = stft(audio);
    MelFilterbank bank = mel_design(audio.sample_rate, spec.n_fft, 40);
    return log_mel(spec, bank, mean_normalize);
}

}  // namespace impnet
