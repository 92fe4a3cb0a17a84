#include "ssi/dsp/griffin_lim.hpp"

#include <cmath>

#include "ssi/core/error.hpp"

namespace ssi::dsp {

double two_sided_norm(const Tensor& one_sided) {
  const std::size_t bins = one_sided.dim(1);
  double acc = 0.0;
  for (std::size_t t = 0; t < one_sided.dim(0); ++t) {
    for (std::size_t k = 0; k < bins; ++k) {
      const double v = one_sided[t * bins + k];
      acc += (k == 0 || k == bins - 1 ? 1.0 : 2.0) * v * v;
    }
  }
  return std::sqrt(acc);
}

GriffinLimResult griffin_lim(const Tensor& magnitude, const StftConfig& cfg, std::size_t n_iter,
                             double sample_rate, std::optional<std::size_t> length) {
  cfg.validate();
  if (magnitude.rank() != 2 || magnitude.dim(1) != cfg.bins()) {
    throw InvalidArgument("griffin_lim: magnitude must be [T, " + std::to_string(cfg.bins()) + "]");
  }
  for (double v : magnitude.values()) {
    if (!(v >= 0.0)) throw InvalidArgument("griffin_lim: magnitudes must be non-negative");
  }
  const std::size_t frames = magnitude.dim(0);
  const std::size_t bins = cfg.bins();

  GriffinLimResult result;
  result.target_norm = two_sided_norm(magnitude);

  ComplexSpectrogram estimate{frames, bins, std::vector<std::complex<double>>(frames * bins)};
  for (std::size_t i = 0; i < estimate.data.size(); ++i) estimate.data[i] = magnitude[i];

  std::vector<double> signal = istft_frames(estimate, cfg);
  Tensor diff({frames, bins});
  for (std::size_t it = 0; it < n_iter; ++it) {
    const ComplexSpectrogram rebuilt = stft_frames(signal, frames, cfg);
    for (std::size_t i = 0; i < rebuilt.data.size(); ++i) {
      const std::complex<double> c = rebuilt.data[i];
      const double a = std::abs(c);
      diff[i] = a - magnitude[i];
      estimate.data[i] = a > 0.0 ? magnitude[i] * (c / a) : std::complex<double>(magnitude[i], 0.0);
    }
    result.errors.push_back(two_sided_norm(diff));
    signal = istft_frames(estimate, cfg);
  }

  const std::size_t out_len = length.value_or(frames * cfg.hop);
  const std::size_t pad = cfg.fft_size / 2;
  result.waveform.sample_rate = sample_rate;
  result.waveform.samples.assign(out_len, 0.0);
  for (std::size_t i = 0; i < out_len && i + pad < signal.size(); ++i) {
    result.waveform.samples[i] = signal[i + pad];
  }
  return result;
}

}  // namespace ssi::dsp
