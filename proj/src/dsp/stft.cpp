#include "ssi/dsp/stft.hpp"

#include <cmath>
#include <numbers>

#include "ssi/core/error.hpp"
#include "ssi/dsp/fft.hpp"

namespace ssi::dsp {

void StftConfig::validate() const {
  if (hop == 0 || win_length == 0 || fft_size == 0) throw InvalidArgument("STFT sizes must be positive");
  if (!(hop <= win_length && win_length <= fft_size)) {
    throw InvalidArgument("STFT requires hop <= win_length <= fft_size");
  }
  if (fft_size % 2 != 0) throw InvalidArgument("fft_size must be even");
}

std::vector<double> analysis_window(const StftConfig& cfg) {
  std::vector<double> w(cfg.fft_size, 0.0);
  const std::size_t offset = (cfg.fft_size - cfg.win_length) / 2;
  for (std::size_t i = 0; i < cfg.win_length; ++i) {
    w[offset + i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                         static_cast<double>(cfg.win_length));
  }
  return w;
}

std::size_t stft_frame_count(std::size_t n, std::size_t hop) { return (n + hop - 1) / hop; }

namespace {

// numpy-style 'reflect' indexing, repeated for signals shorter than the pad.
std::size_t mirror(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
  i %= period;
  if (i < 0) i += period;
  if (i >= static_cast<std::ptrdiff_t>(n)) i = period - i;
  return static_cast<std::size_t>(i);
}

}  // namespace

ComplexSpectrogram stft_frames(const std::vector<double>& x, std::size_t frames, const StftConfig& cfg) {
  cfg.validate();
  if (x.size() < (frames - 1) * cfg.hop + cfg.fft_size) throw InvalidArgument("stft_frames: signal too short");
  const auto window = analysis_window(cfg);
  RealFft fft(cfg.fft_size);
  ComplexSpectrogram spec{frames, cfg.bins(), std::vector<std::complex<double>>(frames * cfg.bins())};
  std::vector<double> frame(cfg.fft_size);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t i = 0; i < cfg.fft_size; ++i) frame[i] = window[i] * x[t * cfg.hop + i];
    fft.forward(frame, std::span(spec.data).subspan(t * spec.bins, spec.bins));
  }
  return spec;
}

std::vector<double> istft_frames(const ComplexSpectrogram& spec, const StftConfig& cfg) {
  cfg.validate();
  if (spec.bins != cfg.bins()) throw InvalidArgument("istft: bin count does not match fft_size");
  const auto window = analysis_window(cfg);
  const std::size_t length = (spec.frames - 1) * cfg.hop + cfg.fft_size;
  std::vector<double> out(length, 0.0);
  std::vector<double> norm(length, 0.0);
  RealFft fft(cfg.fft_size);
  std::vector<double> frame(cfg.fft_size);
  for (std::size_t t = 0; t < spec.frames; ++t) {
    fft.inverse(std::span(spec.data).subspan(t * spec.bins, spec.bins), frame);
    for (std::size_t i = 0; i < cfg.fft_size; ++i) {
      out[t * cfg.hop + i] += window[i] * frame[i];
      norm[t * cfg.hop + i] += window[i] * window[i];
    }
  }
  for (std::size_t i = 0; i < length; ++i) {
    out[i] = norm[i] > 1e-12 ? out[i] / norm[i] : 0.0;
  }
  return out;
}

ComplexSpectrogram stft(const Waveform& wav, const StftConfig& cfg) {
  cfg.validate();
  if (wav.samples.empty()) throw InvalidArgument("stft of an empty signal");
  const std::size_t n = wav.samples.size();
  const std::size_t frames = stft_frame_count(n, cfg.hop);
  const std::size_t pad = cfg.fft_size / 2;
  std::vector<double> padded((frames - 1) * cfg.hop + cfg.fft_size);
  for (std::size_t i = 0; i < padded.size(); ++i) {
    padded[i] = wav.samples[mirror(static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(pad), n)];
  }
  return stft_frames(padded, frames, cfg);
}

std::vector<double> istft(const ComplexSpectrogram& spec, const StftConfig& cfg, std::size_t length) {
  const auto full = istft_frames(spec, cfg);
  const std::size_t pad = cfg.fft_size / 2;
  std::vector<double> out(length, 0.0);
  for (std::size_t i = 0; i < length && i + pad < full.size(); ++i) out[i] = full[i + pad];
  return out;
}

Tensor magnitude(const ComplexSpectrogram& spec) {
  Tensor mag({spec.frames, spec.bins});
  for (std::size_t i = 0; i < spec.data.size(); ++i) mag[i] = std::abs(spec.data[i]);
  return mag;
}

}  // namespace ssi::dsp
