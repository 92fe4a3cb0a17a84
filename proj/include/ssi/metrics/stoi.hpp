#pragma once

#include <cstddef>

#include "ssi/core/tensor.hpp"
#include "ssi/dsp/waveform.hpp"

namespace ssi::metrics {

// Short-time objective intelligibility front end, following the published
// reference implementation: 10 kHz, 256-sample Hann frames with 50% overlap,
// 512-point FFT, 15 third-octave bands from 150 Hz, 30-frame segments.
struct StoiParams {
  double sample_rate = 10000.0;
  std::size_t frame = 256;
  std::size_t fft = 512;
  std::size_t bands = 15;
  double min_freq = 150.0;
  std::size_t segment = 30;
  double beta_db = -15.0;
  double dyn_range_db = 40.0;
};

// [bands, bins] 0/1 third-octave band matrix.
Tensor third_octave_matrix(const StoiParams& p = {});

// Band envelopes [bands, frames] of ref and est after resampling and
// silent-frame removal. Throws TooShortError when fewer than one segment of
// frames remain.
struct StoiEnvelopes {
  Tensor ref;
  Tensor est;
};
StoiEnvelopes stoi_envelopes(const dsp::Waveform& ref, const dsp::Waveform& est, const StoiParams& p = {});

double stoi(const dsp::Waveform& ref, const dsp::Waveform& est, const StoiParams& p = {});
double estoi(const dsp::Waveform& ref, const dsp::Waveform& est, const StoiParams& p = {});

// Scores from precomputed envelopes.
double stoi_from_envelopes(const StoiEnvelopes& env, const StoiParams& p = {});
double estoi_from_envelopes(const StoiEnvelopes& env, const StoiParams& p = {});

}  // namespace ssi::metrics
