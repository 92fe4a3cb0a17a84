#pragma once

#include <cstddef>

namespace ssi::dsp {

// Analysis parameters. The hop of 269 samples at 22050 Hz gives ~81.97
// frames/s, i.e. one mel frame per 82 fps ultrasound frame.
struct DspConfig {
  double sample_rate = 22050.0;
  std::size_t win_length = 1024;
  std::size_t hop = 269;
  std::size_t fft_size = 1024;
  std::size_t n_mels = 80;
  double fmin = 0.0;
  double fmax = 8000.0;
  double log_floor = 1e-10;
  std::size_t griffin_lim_iters = 60;
  std::size_t mel_inverse_iters = 200;

  double frame_rate() const { return sample_rate / static_cast<double>(hop); }
  std::size_t bins() const { return fft_size / 2 + 1; }
  void validate() const;
};

}  // namespace ssi::dsp
