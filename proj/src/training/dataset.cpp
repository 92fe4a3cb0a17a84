#include "ssi/training/dataset.hpp"

#include "ssi/core/error.hpp"
#include "ssi/dataio/examples.hpp"

namespace ssi::training {

void ExampleSet::add(dataio::UltrasoundClip clip, dsp::MelSpectrogram mel) {
  if (clip.frame_count() != mel.frame_count()) {
    throw InvalidArgument("utterance '" + clip.utterance_id + "': " + std::to_string(clip.frame_count()) +
                          " video frames but " + std::to_string(mel.frame_count()) + " mel frames");
  }
  if (!clips_.empty() && (clip.height() != clips_[0].height() || clip.width() != clips_[0].width() ||
                          mel.n_mels() != mels_[0].n_mels())) {
    throw InvalidArgument("utterance '" + clip.utterance_id + "' has a different frame or mel size");
  }
  const std::size_t u = clips_.size();
  for (std::size_t c : dataio::example_centers(clip.frame_count())) refs_.emplace_back(u, c);
  clips_.push_back(std::move(clip));
  mels_.push_back(std::move(mel));
}

Batch ExampleSet::gather(std::span<const std::size_t> indices) const {
  if (indices.empty()) throw InvalidArgument("cannot gather an empty batch");
  const std::size_t h = clips_[0].height(), w = clips_[0].width(), n_mels = mels_[0].n_mels();
  const std::size_t in_per = dataio::kInputFrames * h * w, out_per = dataio::kTargetFrames * n_mels;
  Batch b{Tensor({indices.size(), dataio::kInputFrames, h, w}), Tensor({indices.size(), dataio::kTargetFrames, n_mels})};
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto [u, c] = refs_.at(indices[i]);
    dataio::copy_input_window(clips_[u], c, b.inputs.data() + i * in_per);
    dataio::copy_target_window(mels_[u], c, b.targets.data() + i * out_per);
  }
  return b;
}

Batch ExampleSet::gather_range(std::size_t begin, std::size_t end) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = begin; i < end; ++i) idx.push_back(i);
  return gather(idx);
}

}  // namespace ssi::training
