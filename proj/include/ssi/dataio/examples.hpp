#pragma once

#include <vector>

#include "ssi/dataio/clip.hpp"
#include "ssi/dsp/mel.hpp"

namespace ssi::dataio {

inline constexpr std::size_t kInputFrames = 25;
inline constexpr std::size_t kTargetFrames = 5;
inline constexpr std::size_t kInputHalf = kInputFrames / 2;
inline constexpr std::size_t kTargetHalf = kTargetFrames / 2;

struct TrainingExample {
  Tensor input;   // [25, H, W]
  Tensor target;  // [5, n_mels]
  std::size_t center = 0;
};

// Centres c with a full 25-frame context: 12 <= c <= T - 13.
std::vector<std::size_t> example_centers(std::size_t frame_count);

// Copies frames c-12..c+12 into dst (25*H*W values).
void copy_input_window(const UltrasoundClip& clip, std::size_t center, double* dst);
// Copies mel rows c-2..c+2 into dst (5*n_mels values).
void copy_target_window(const dsp::MelSpectrogram& mel, std::size_t center, double* dst);

// One example per centre; clip and mel must have equal frame counts.
std::vector<TrainingExample> make_examples(const UltrasoundClip& clip, const dsp::MelSpectrogram& mel);

}  // namespace ssi::dataio
