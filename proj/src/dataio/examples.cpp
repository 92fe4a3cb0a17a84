#include "ssi/dataio/examples.hpp"

#include <algorithm>

#include "ssi/core/error.hpp"

namespace ssi::dataio {

std::vector<std::size_t> example_centers(std::size_t frame_count) {
  std::vector<std::size_t> centers;
  if (frame_count < kInputFrames) return centers;
  for (std::size_t c = kInputHalf; c + kInputHalf < frame_count; ++c) centers.push_back(c);
  return centers;
}

void copy_input_window(const UltrasoundClip& clip, std::size_t center, double* dst) {
  if (center < kInputHalf || center + kInputHalf >= clip.frame_count()) {
    throw InvalidArgument("input window around frame " + std::to_string(center) + " leaves the clip");
  }
  const std::size_t frame = clip.height() * clip.width();
  const double* src = clip.frames.data() + (center - kInputHalf) * frame;
  std::copy(src, src + kInputFrames * frame, dst);
}

void copy_target_window(const dsp::MelSpectrogram& mel, std::size_t center, double* dst) {
  if (center < kTargetHalf || center + kTargetHalf >= mel.frame_count()) {
    throw InvalidArgument("target window around frame " + std::to_string(center) + " leaves the spectrogram");
  }
  const std::size_t n = mel.n_mels();
  const double* src = mel.frames.data() + (center - kTargetHalf) * n;
  std::copy(src, src + kTargetFrames * n, dst);
}

std::vector<TrainingExample> make_examples(const UltrasoundClip& clip, const dsp::MelSpectrogram& mel) {
  if (clip.frame_count() != mel.frame_count()) {
    throw InvalidArgument("clip has " + std::to_string(clip.frame_count()) + " frames but mel has " +
                          std::to_string(mel.frame_count()));
  }
  std::vector<TrainingExample> out;
  for (std::size_t c : example_centers(clip.frame_count())) {
    TrainingExample ex{Tensor({kInputFrames, clip.height(), clip.width()}), Tensor({kTargetFrames, mel.n_mels()}), c};
    copy_input_window(clip, c, ex.input.data());
    copy_target_window(mel, c, ex.target.data());
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace ssi::dataio
