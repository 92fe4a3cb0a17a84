#pragma once

#include <vector>

#include "ssi/core/tensor.hpp"
#include "ssi/dsp/config.hpp"
#include "ssi/dsp/stft.hpp"
#include "ssi/dsp/waveform.hpp"

namespace ssi::dsp {

double hz_to_mel(double hz) noexcept;  // 2595 * log10(1 + hz / 700)
double mel_to_hz(double mel) noexcept;

enum class MelNormalization { kRaw, kStandardized };

/// Time-major log-mel matrix. `frames` is [T, n_mels]; when standardized,
/// `mean`/`std` hold the per-channel statistics that were removed.
struct MelSpectrogram {
  Tensor frames;
  double frame_rate = 0.0;
  MelNormalization normalization = MelNormalization::kRaw;
  std::vector<double> mean;
  std::vector<double> std;

  std::size_t frame_count() const { return frames.dim(0); }
  std::size_t n_mels() const { return frames.dim(1); }
};

StftConfig stft_config(const DspConfig& cfg);

// Triangular filters, unit peak, centres uniform on the mel scale. [n_mels, bins].
Tensor mel_filterbank(const DspConfig& cfg);
// Centre frequency (Hz) of each filter.
std::vector<double> mel_center_frequencies(const DspConfig& cfg);

// log(max(mel power, floor)) for a [T, bins] magnitude spectrogram.
Tensor log_mel_from_magnitude(const Tensor& magnitude, const DspConfig& cfg);

MelSpectrogram mel_spectrogram(const Waveform& wav, const DspConfig& cfg);

// Linear magnitude [T, bins] from a raw log-mel spectrogram, via the
// regularised pseudo-inverse of the filterbank with negatives clamped to 0.
Tensor invert_mel(const MelSpectrogram& mel, const DspConfig& cfg);

}  // namespace ssi::dsp
