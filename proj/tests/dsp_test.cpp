#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "signals.hpp"
#include "ssi/core/error.hpp"
#include "ssi/dsp/griffin_lim.hpp"
#include "ssi/dsp/mel.hpp"
#include "ssi/dsp/resample.hpp"
#include "ssi/dsp/stft.hpp"

namespace ssi::dsp {
namespace {

const DspConfig kCfg{};

std::size_t argmax_bin(const ComplexSpectrogram& s, std::size_t t) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < s.bins; ++k) {
    if (std::abs(s(t, k)) > std::abs(s(t, best))) best = k;
  }
  return best;
}

TEST(StftTest, FrameCountAndEmptySignal) {
  auto spec = stft(testing::sine(440.0, 0.5), stft_config(kCfg));
  EXPECT_EQ(spec.frames, (11025 + 268) / 269);
  EXPECT_EQ(spec.bins, 513u);
  EXPECT_THROW(stft(Waveform{{}, 22050.0}, stft_config(kCfg)), InvalidArgument);
  EXPECT_THROW(stft(Waveform{{1.0}, 22050.0}, StftConfig{1024, 2048, 1024}), InvalidArgument);
}

TEST(StftTest, ConstantSignalIsDc) {
  const double c = 0.37;
  Waveform w{std::vector<double>(5000, c), 22050.0};
  auto spec = stft(w, stft_config(kCfg));
  const double n = 1024.0;
  for (std::size_t t = 0; t < spec.frames; ++t) {
    EXPECT_NEAR(std::abs(spec(t, 0)), c * n / 2.0, 1e-9);
    // The periodic Hann window itself has a single sidelobe in bin 1.
    EXPECT_NEAR(std::abs(spec(t, 1)), c * n / 4.0, 1e-9);
    for (std::size_t k = 2; k < spec.bins; ++k) EXPECT_LT(std::abs(spec(t, k)), 1e-9 * c * n);
    EXPECT_EQ(argmax_bin(spec, t), 0u);
  }
}

TEST(StftTest, BinCenteredSinusoidPeaksAtItsBin) {
  for (std::size_t k : {5u, 37u, 200u}) {
    const double f = static_cast<double>(k) * 22050.0 / 1024.0;
    auto spec = stft(testing::sine(f, 0.3), stft_config(kCfg));
    // Frames that reach into the reflected padding are excluded.
    for (std::size_t t = 2; t + 2 < spec.frames; ++t) EXPECT_EQ(argmax_bin(spec, t), k);
  }
}

TEST(StftTest, WindowedParseval) {
  auto w = testing::speech_like(0.4, 3);
  const auto cfg = stft_config(kCfg);
  auto spec = stft(w, cfg);
  const auto win = analysis_window(cfg);
  for (std::size_t t = 2; t + 2 < spec.frames; ++t) {
    double time_energy = 0.0;
    for (std::size_t i = 0; i < 1024; ++i) {
      const double v = win[i] * w.samples[t * cfg.hop + i - 512];
      time_energy += v * v;
    }
    double freq_energy = 0.0;
    for (std::size_t k = 0; k < spec.bins; ++k) {
      freq_energy += (k == 0 || k == 512 ? 1.0 : 2.0) * std::norm(spec(t, k));
    }
    EXPECT_NEAR(freq_energy / (1024.0 * time_energy), 1.0, 1e-9);
  }
}

TEST(StftTest, IstftInvertsStft) {
  auto w = testing::speech_like(0.3, 4);
  auto back = istft(stft(w, stft_config(kCfg)), stft_config(kCfg), w.size());
  double err = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) err = std::max(err, std::abs(back[i] - w.samples[i]));
  EXPECT_LT(err, 1e-10);
}

TEST(MelTest, FilterbankRowsAndCenters) {
  Tensor fb = mel_filterbank(kCfg);
  ASSERT_EQ(fb.shape(), (Shape{80, 513}));
  for (std::size_t m = 0; m < 80; ++m) {
    double row = 0.0;
    for (std::size_t k = 0; k < 513; ++k) {
      EXPECT_GE(fb[m * 513 + k], 0.0);
      row += fb[m * 513 + k];
    }
    EXPECT_GT(row, 0.0);
  }
  auto centers = mel_center_frequencies(kCfg);
  ASSERT_EQ(centers.size(), 80u);
  for (std::size_t m = 1; m < 80; ++m) EXPECT_GT(centers[m], centers[m - 1]);
}

TEST(MelTest, InteriorBinsAreCovered) {
  Tensor fb = mel_filterbank(kCfg);
  for (std::size_t k = 0; k < 513; ++k) {
    const double f = k * 22050.0 / 1024.0;
    if (!(f > kCfg.fmin && f < kCfg.fmax)) continue;
    double best = 0.0;
    for (std::size_t m = 0; m < 80; ++m) best = std::max(best, fb[m * 513 + k]);
    EXPECT_GT(best, 0.0) << "bin " << k;
  }
}

TEST(MelTest, HzMelRoundTrip) {
  for (double f : {100.0, 1000.0, 7999.0}) EXPECT_LT(std::abs(f - mel_to_hz(hz_to_mel(f))), 1e-6);
  EXPECT_NEAR(hz_to_mel(700.0), 2595.0 * std::log10(2.0), 1e-12);
}

TEST(MelTest, SilenceHitsFloor) {
  Waveform w{std::vector<double>(3000, 0.0), 22050.0};
  auto mel = mel_spectrogram(w, kCfg);
  EXPECT_EQ(mel.frame_count(), (3000u + 268u) / 269u);
  EXPECT_EQ(mel.n_mels(), 80u);
  for (double v : mel.frames.values()) EXPECT_EQ(v, std::log(1e-10));
  EXPECT_NEAR(mel.frame_rate, 22050.0 / 269.0, 1e-12);
  EXPECT_EQ(mel.normalization, MelNormalization::kRaw);
}

TEST(MelTest, DoublingAmplitudeAddsTwoLogTwo) {
  auto w = testing::white_noise(0.5, 9);
  auto w2 = w;
  for (auto& s : w2.samples) s *= 2.0;
  auto a = mel_spectrogram(w, kCfg), b = mel_spectrogram(w2, kCfg);
  for (std::size_t i = 0; i < a.frames.size(); ++i) {
    EXPECT_NEAR(b.frames[i] - a.frames[i], 2.0 * std::log(2.0), 1e-6);
  }
}

TEST(MelTest, WrongSampleRateRejected) {
  EXPECT_THROW(mel_spectrogram(Waveform{std::vector<double>(100), 16000.0}, kCfg), InvalidArgument);
}

TEST(InvertMelTest, FloorGivesNearZero) {
  MelSpectrogram mel{Tensor({4, 80}, std::log(1e-10)), kCfg.frame_rate()};
  Tensor mag = invert_mel(mel, kCfg);
  for (double v : mag.values()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1e-4);
  }
}

TEST(InvertMelTest, RoundTripWithinTolerance) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto mel = mel_spectrogram(testing::speech_like(0.8, seed), kCfg);
    Tensor mag = invert_mel(mel, kCfg);
    for (double v : mag.values()) ASSERT_GE(v, 0.0);
    Tensor again = log_mel_from_magnitude(mag, kCfg);
    EXPECT_LT(max_abs_diff(again, mel.frames), 0.15) << "seed " << seed;
  }
}

TEST(InvertMelTest, RejectsStandardized) {
  MelSpectrogram mel{Tensor({2, 80}), 82.0, MelNormalization::kStandardized};
  EXPECT_THROW(invert_mel(mel, kCfg), InvalidArgument);
}

TEST(GriffinLimTest, ZeroMagnitudeGivesSilence) {
  auto r = griffin_lim(Tensor({6, 513}, 0.0), stft_config(kCfg), 5, 22050.0);
  EXPECT_EQ(r.waveform.size(), 6u * 269u);
  for (double v : r.waveform.samples) EXPECT_EQ(v, 0.0);
}

TEST(GriffinLimTest, NegativeMagnitudeRejected) {
  Tensor m({3, 513}, 1.0);
  m[7] = -0.1;
  EXPECT_THROW(griffin_lim(m, stft_config(kCfg), 3, 22050.0), InvalidArgument);
}

TEST(GriffinLimTest, ErrorIsMonotoneAndConverges) {
  auto w = testing::speech_like(0.8, 5);
  Tensor mag = magnitude(stft(w, stft_config(kCfg)));
  auto r = griffin_lim(mag, stft_config(kCfg), 60, 22050.0, w.size());
  ASSERT_EQ(r.errors.size(), 60u);
  for (std::size_t i = 1; i < r.errors.size(); ++i) EXPECT_LE(r.errors[i], r.errors[i - 1] + 1e-8);
  EXPECT_LT(r.relative_error(), 0.1);
  EXPECT_EQ(r.waveform.size(), w.size());
}

TEST(ResampleTest, SameRateIsIdentity) {
  auto w = testing::speech_like(0.1, 2);
  EXPECT_EQ(resample(w, 22050.0).samples, w.samples);
}

TEST(ResampleTest, DcIsPreserved) {
  Waveform w{std::vector<double>(4410, 0.3), 22050.0};
  auto r = resample(w, 10000.0);
  EXPECT_EQ(r.size(), 2000u);
  for (double v : r.samples) EXPECT_NEAR(v, 0.3, 1e-6);
}

TEST(ResampleTest, KeepsSinusoidFrequency) {
  auto r = resample(testing::sine(1000.0, 0.5), 10000.0);
  EXPECT_EQ(r.size(), 5000u);
  EXPECT_EQ(r.sample_rate, 10000.0);
  auto spec = stft(r, StftConfig{512, 128, 512});
  const double expected_bin = 1000.0 * 512.0 / 10000.0;
  for (std::size_t t = 1; t + 1 < spec.frames; ++t) {
    EXPECT_LE(std::abs(static_cast<double>(argmax_bin(spec, t)) - expected_bin), 1.0);
  }
}

}  // namespace
}  // namespace ssi::dsp
