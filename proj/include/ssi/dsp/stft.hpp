#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "ssi/core/tensor.hpp"
#include "ssi/dsp/waveform.hpp"

namespace ssi::dsp {

struct StftConfig {
  std::size_t win_length = 1024;
  std::size_t hop = 269;
  std::size_t fft_size = 1024;

  std::size_t bins() const { return fft_size / 2 + 1; }
  void validate() const;
};

// One-sided spectrogram, frame-major: value(t, k) = data[t * bins + k].
struct ComplexSpectrogram {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<std::complex<double>> data;

  std::complex<double>& operator()(std::size_t t, std::size_t k) { return data[t * bins + k]; }
  std::complex<double> operator()(std::size_t t, std::size_t k) const { return data[t * bins + k]; }
};

// Periodic Hann window of win_length samples, centred in fft_size.
std::vector<double> analysis_window(const StftConfig& cfg);

// Number of centred frames for a signal of n samples: ceil(n / hop).
std::size_t stft_frame_count(std::size_t n, std::size_t hop);

// Centred STFT. The signal is reflect-padded by fft_size/2 on both sides and
// frame t covers original samples [t*hop - fft_size/2, t*hop + fft_size/2).
ComplexSpectrogram stft(const Waveform& wav, const StftConfig& cfg);

// Least-squares inverse of stft(), trimmed to `length` samples.
std::vector<double> istft(const ComplexSpectrogram& spec, const StftConfig& cfg, std::size_t length);

// Frame-domain variants without centring: frame t covers x[t*hop, t*hop+fft).
// The signal must hold (frames-1)*hop + fft_size samples.
ComplexSpectrogram stft_frames(const std::vector<double>& x, std::size_t frames, const StftConfig& cfg);
std::vector<double> istft_frames(const ComplexSpectrogram& spec, const StftConfig& cfg);

// |X| as a [frames, bins] tensor.
Tensor magnitude(const ComplexSpectrogram& spec);

}  // namespace ssi::dsp
