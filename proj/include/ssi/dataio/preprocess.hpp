#pragma once

#include <span>
#include <vector>

#include "ssi/dataio/clip.hpp"
#include "ssi/dsp/mel.hpp"

namespace ssi::dataio {

inline constexpr std::size_t kProcessedHeight = 64;
inline constexpr std::size_t kProcessedWidth = 128;

// Catmull-Rom (a = -0.5) bicubic resampling of one [H, W] frame with
// edge-clamped taps and half-pixel-centre coordinates.
Tensor bicubic_resize(const Tensor& frame, std::size_t out_height, std::size_t out_width);
UltrasoundClip resize_clip(const UltrasoundClip& clip, std::size_t out_height = kProcessedHeight,
                           std::size_t out_width = kProcessedWidth);

// 2 (x - min) / (max - min) - 1 over the whole clip. A constant clip maps to zeros.
UltrasoundClip minmax_scale(const UltrasoundClip& clip);
// Variant with externally supplied bounds (corpus-wide scaling); values are clamped to [-1, 1].
UltrasoundClip minmax_scale(const UltrasoundClip& clip, double lo, double hi);

// Resize then scale: the full image chain applied to every raw clip.
UltrasoundClip preprocess_clip(const UltrasoundClip& raw);

struct MelNormStats {
  std::vector<double> mean;
  std::vector<double> std;
};

// Per-channel statistics over every frame of the given (raw) spectrograms.
// Channels with std below 1e-8 get std 1.
MelNormStats compute_norm_stats(std::span<const dsp::MelSpectrogram> mels);
dsp::MelSpectrogram standardize_mel(const dsp::MelSpectrogram& mel, const MelNormStats& stats);
dsp::MelSpectrogram destandardize_mel(const dsp::MelSpectrogram& mel);

}  // namespace ssi::dataio
