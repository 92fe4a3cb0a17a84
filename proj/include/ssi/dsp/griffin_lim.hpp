#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "ssi/core/tensor.hpp"
#include "ssi/dsp/stft.hpp"
#include "ssi/dsp/waveform.hpp"

namespace ssi::dsp {

struct GriffinLimResult {
  Waveform waveform;
  // errors[i] = || |STFT(x_{i+1})| - M ||_F after iteration i+1, measured over
  // the full Hermitian spectrum.
  std::vector<double> errors;
  double target_norm = 0.0;

  double relative_error() const { return errors.empty() ? 0.0 : errors.back() / target_norm; }
};

// Frobenius norm of a one-sided [T, bins] spectrogram counted over both
// halves of the Hermitian spectrum (DC and Nyquist once, the rest twice).
double two_sided_norm(const Tensor& one_sided);

/// Classic Griffin-Lim phase reconstruction from zero initial phase.
///
/// Iterates in the frame domain of the centred STFT (the reflect padding is
/// treated as free signal), so every least-squares resynthesis is an exact
/// projection and the magnitude error never increases. The returned waveform
/// is trimmed back to `length` samples (default frames * hop).
GriffinLimResult griffin_lim(const Tensor& magnitude, const StftConfig& cfg, std::size_t n_iter,
                             double sample_rate, std::optional<std::size_t> length = std::nullopt);

}  // namespace ssi::dsp
