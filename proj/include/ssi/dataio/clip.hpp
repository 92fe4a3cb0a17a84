#pragma once

#include <string>

#include "ssi/core/tensor.hpp"

namespace ssi::dataio {

inline constexpr double kVideoFps = 22050.0 / 269.0;  // one video frame per mel hop

/// Tongue-image sequence. `frames` is [T, H, W]; raw clips hold integer
/// intensities in [0, 255], processed clips hold values in [-1, 1].
struct UltrasoundClip {
  Tensor frames;
  double fps = kVideoFps;
  std::string utterance_id;

  std::size_t frame_count() const { return frames.dim(0); }
  std::size_t height() const { return frames.dim(1); }
  std::size_t width() const { return frames.dim(2); }
};

}  // namespace ssi::dataio
