#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "impnet/features.hpp"
#include "impnet/io.hpp"

using namespace impnet;
namespace fs = std::filesystem;

namespace {

const fs::path kToneWav = fs::path(IMPNET_SOURCE_DIR) / "data" / "tone_1khz_16k.wav";

fs::path temp_dir() {
    static int counter = 0;
    fs::path dir = fs::temp_directory_path() /
                   ("impnet_features_test_" + std::to_string(counter++));
    fs::create_directories(dir);
    return dir;
}

AudioBuffer tone(double freq_hz, double seconds, std::uint32_t rate, double amp = 0.5) {
    AudioBuffer buf;
    buf.sample_rate = rate;
    const std::size_t n = static_cast<std::size_t>(seconds * rate);
    buf.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        buf.samples[i] =
            amp * std::sin(2.0 * M_PI * freq_hz * static_cast<double>(i) / rate);
    }
    return buf;
}

}  // namespace

TEST_CASE("wav round trip and scaling") {
    fs::path dir = temp_dir();
    write_wav(dir / "zeros.wav", std::vector<std::int16_t>(160, 0), 16000);
    AudioBuffer zeros = read_wav(dir / "zeros.wav");
    CHECK(zeros.sample_rate == 16000);
    REQUIRE(zeros.samples.size() == 160);
    for (double v : zeros.samples) CHECK(v == 0.0);

    write_wav(dir / "edge.wav", {-32768, 32767, 0}, 8000);
    AudioBuffer edge = read_wav(dir / "edge.wav");
    CHECK(edge.samples[0] == -1.0);  // -32768 / 32768 exactly
    CHECK(edge.samples[1] == doctest::Approx(32767.0 / 32768.0));
    CHECK(edge.samples[2] == 0.0);
}

TEST_CASE("wav rejects non-mono and malformed input") {
    fs::path dir = temp_dir();

    // Hand-build a stereo header.
    std::string bytes;
    auto u32 = [&](std::uint32_t v) { bytes.append(reinterpret_cast<char*>(&v), 4); };
    auto u16 = [&](std::uint16_t v) { bytes.append(reinterpret_cast<char*>(&v), 2); };
    bytes += "RIFF";
    u32(36 + 8);
    bytes += "WAVEfmt ";
    u32(16);
    u16(1);
    u16(2);  // stereo
    u32(16000);
    u32(64000);
    u16(4);
    u16(16);
    bytes += "data";
    u32(8);
    bytes.append(8, '\0');
    {
        std::ofstream out(dir / "stereo.wav", std::ios::binary);
        out << bytes;
    }
    try {
        read_wav(dir / "stereo.wav");
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("non-mono") != std::string::npos);
    }

    {
        std::ofstream out(dir / "junk.wav", std::ios::binary);
        out << "not a wav at all";
    }
    CHECK_THROWS_AS(read_wav(dir / "junk.wav"), IoError);
}

TEST_CASE("stft frame geometry and zero input") {
    AudioBuffer silence;
    silence.sample_rate = 16000;
    silence.samples.assign(16000, 0.0);
    PowerSpectrogram spec = stft(silence);
    // Window 400 samples, hop 160: floor((16000 - 400)/160) + 1 = 98.
    CHECK(spec.power.shape().time_steps == 98);
    CHECK(spec.n_fft == 512);
    CHECK(spec.power.shape().freq_bins == 257);
    for (double v : spec.power.values()) CHECK(v == 0.0);

    AudioBuffer tiny;
    tiny.sample_rate = 16000;
    tiny.samples.assign(300, 0.0);  // shorter than one window
    CHECK_THROWS_AS(stft(tiny), ShapeError);
}

TEST_CASE("stft locates a pure tone") {
    PowerSpectrogram spec = stft(tone(1000.0, 0.5, 16000));
    // Expected bin: round(1000 * 512 / 16000) = 32.
    const Shape& s = spec.power.shape();
    for (std::size_t fr = 0; fr < s.time_steps; ++fr) {
        std::size_t argmax = 0;
        double best = -1.0;
        for (std::size_t b = 0; b < s.freq_bins; ++b) {
            if (spec.power.at(b, fr, 0) > best) {
                best = spec.power.at(b, fr, 0);
                argmax = b;
            }
        }
        CHECK(argmax == 32);
    }
}

TEST_CASE("stft power scales quadratically with amplitude") {
    AudioBuffer base = tone(440.0, 0.2, 16000, 0.25);
    AudioBuffer doubled = base;
    for (double& v : doubled.samples) v *= 2.0;
    PowerSpectrogram a = stft(base);
    PowerSpectrogram b = stft(doubled);
    for (std::size_t i = 0; i < a.power.size(); ++i) {
        const double want = 4.0 * a.power.values()[i];
        const double got = b.power.values()[i];
        CHECK(std::fabs(got - want) <= 1e-9 * std::max(1.0, std::fabs(want)));
    }
}

TEST_CASE("mel scale closed forms") {
    CHECK(hz_to_mel(0.0) == 0.0);
    CHECK(std::fabs(hz_to_mel(700.0) - 781.17) < 0.01);
    CHECK(mel_to_hz(hz_to_mel(1234.5)) == doctest::Approx(1234.5).epsilon(1e-12));
}

TEST_CASE("mel filterbank geometry") {
    MelFilterbank bank = mel_design(16000, 512, 40);
    CHECK(bank.n_filters == 40);
    CHECK(bank.n_bins == 257);

    // Centers strictly increase.
    for (std::size_t m = 1; m < bank.n_filters; ++m) {
        CHECK(bank.center_hz[m] > bank.center_hz[m - 1]);
    }

    // Triangles are nonnegative and per-bin sums stay <= 1 + eps.
    for (std::size_t b = 0; b < bank.n_bins; ++b) {
        double sum = 0.0;
        for (std::size_t m = 0; m < bank.n_filters; ++m) {
            CHECK(bank.weight(m, b) >= 0.0);
            sum += bank.weight(m, b);
        }
        CHECK(sum <= 1.0 + 1e-9);
    }

    // Too many filters for the FFT resolution.
    CHECK_THROWS_AS(mel_design(16000, 64, 40), ShapeError);
}

TEST_CASE("log_mel floor, tone band, power shift") {
    AudioBuffer silence;
    silence.sample_rate = 16000;
    silence.samples.assign(8000, 0.0);
    PowerSpectrogram spec = stft(silence);
    MelFilterbank bank = mel_design(16000, spec.n_fft, 40);
    Tensor lm = log_mel(spec, bank);
    for (double v : lm.values()) CHECK(v == std::log(1e-10));

    // The winning band covers the tone frequency.
    PowerSpectrogram tone_spec = stft(tone(1000.0, 0.5, 16000));
    Tensor tone_lm = log_mel(tone_spec, bank);
    std::size_t band = 0;
    double best = -1e300;
    for (std::size_t m = 0; m < 40; ++m) {
        if (tone_lm.at(m, 10, 0) > best) {
            best = tone_lm.at(m, 10, 0);
            band = m;
        }
    }
    const double lo = band > 0 ? bank.center_hz[band - 1] : 0.0;
    const double hi = bank.center_hz[band + 1];
    CHECK(lo < 1000.0);
    CHECK(1000.0 < hi);

    // Doubling the waveform adds ln 4 in the power domain.
    AudioBuffer loud = tone(1000.0, 0.5, 16000);
    for (double& v : loud.samples) v *= 2.0;
    Tensor loud_lm = log_mel(stft(loud), bank);
    CHECK(loud_lm.at(band, 10, 0) - tone_lm.at(band, 10, 0) ==
          doctest::Approx(std::log(4.0)).epsilon(1e-9));
}

TEST_CASE("context stacking") {
    // Single frame: 21 identical columns.
    Tensor one(Shape(3, 1, 1));
    one.values() = {1.0, 2.0, 3.0};
    auto windows = stack_context(one);
    REQUIRE(windows.size() == 1);
    CHECK(windows[0].shape() == Shape(3, 21, 1));
    for (std::size_t t = 0; t < 21; ++t) {
        CHECK(windows[0].at(0, t, 0) == 1.0);
        CHECK(windows[0].at(2, t, 0) == 3.0);
    }

    // Interior frame of a 21-frame utterance: exact copy, no padding.
    Tensor feats(Shape(2, 21, 1));
    for (std::size_t t = 0; t < 21; ++t) {
        feats.at(0, t, 0) = static_cast<double>(t);
        feats.at(1, t, 0) = 100.0 + static_cast<double>(t);
    }
    auto all = stack_context(feats);
    CHECK(all.size() == 21);  // one window per frame
    const Tensor& center = all[10];
    for (std::size_t t = 0; t < 21; ++t) {
        CHECK(center.at(0, t, 0) == static_cast<double>(t));
        CHECK(center.at(1, t, 0) == 100.0 + static_cast<double>(t));
    }
}

TEST_CASE("golden tone wav pipeline is deterministic") {
    REQUIRE(fs::exists(kToneWav));
    Tensor a = wav_to_log_mel(kToneWav);
    Tensor b = wav_to_log_mel(kToneWav);
    CHECK(a == b);
    CHECK(a.shape() == Shape(40, 98, 1));

    // Byte-identical dumps across runs.
    fs::path dir = temp_dir();
    save_tensor(dir / "a.impt", a);
    save_tensor(dir / "b.impt", b);
    CHECK(read_file_bytes(dir / "a.impt") == read_file_bytes(dir / "b.impt"));
}

TEST_CASE("expected sample rate is enforced") {
    CHECK_THROWS_AS(wav_to_log_mel(kToneWav, false, 8000), IoError);
    CHECK_NOTHROW(wav_to_log_mel(kToneWav, false, 16000));
}

TEST_CASE("mean normalization zeroes band means") {
    Tensor lm = wav_to_log_mel(kToneWav, true);
    for (std::size_t m = 0; m < lm.shape().freq_bins; ++m) {
        double mean = 0.0;
        for (std::size_t t = 0; t < lm.shape().time_steps; ++t) mean += lm.at(m, t, 0);
        mean /= static_cast<double>(lm.shape().time_steps);
        CHECK(std::fabs(mean) < 1e-12);
    }
}

TEST_CASE("fft known answers") {
    // Impulse: flat spectrum.
    std::vector<std::complex<double>> impulse(8, {0.0, 0.0});
    impulse[0] = {1.0, 0.0};
    fft_pow2(impulse);
    for (const auto& v : impulse) {
        CHECK(v.real() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::fabs(v.imag()) < 1e-12);
    }

    // Single complex exponential lands in one bin.
    std::vector<std::complex<double>> wave(16);
    for (std::size_t n = 0; n < 16; ++n) {
        const double angle = 2.0 * M_PI * 3.0 * static_cast<double>(n) / 16.0;
        wave[n] = {std::cos(angle), std::sin(angle)};
    }
    fft_pow2(wave);
    for (std::size_t b = 0; b < 16; ++b) {
        const double mag = std::abs(wave[b]);
        if (b == 3) {
            CHECK(mag == doctest::Approx(16.0).epsilon(1e-9));
        } else {
            CHECK(mag < 1e-9);
        }
    }

    std::vector<std::complex<double>> bad(6);
    CHECK_THROWS_AS(fft_pow2(bad), ShapeError);
}
