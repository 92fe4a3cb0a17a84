#pragma once

#include <span>
#include <utility>
#include <vector>

#include "ssi/dataio/clip.hpp"
#include "ssi/dsp/mel.hpp"

namespace ssi::training {

struct Batch {
  Tensor inputs;   // [B, 25, H, W]
  Tensor targets;  // [B, 5, n_mels]

  std::size_t size() const { return inputs.dim(0); }
};

/// Processed clips paired with standardized mels. Examples are referenced by
/// (utterance, centre) and only materialized when a batch is gathered.
class ExampleSet {
 public:
  void add(dataio::UltrasoundClip clip, dsp::MelSpectrogram mel);

  std::size_t size() const noexcept { return refs_.size(); }
  bool empty() const noexcept { return refs_.empty(); }
  std::size_t utterance_count() const noexcept { return clips_.size(); }
  const dataio::UltrasoundClip& clip(std::size_t u) const { return clips_[u]; }
  const dsp::MelSpectrogram& mel(std::size_t u) const { return mels_[u]; }
  std::pair<std::size_t, std::size_t> ref(std::size_t i) const { return refs_[i]; }

  Batch gather(std::span<const std::size_t> indices) const;
  Batch gather_range(std::size_t begin, std::size_t end) const;

 private:
  std::vector<dataio::UltrasoundClip> clips_;
  std::vector<dsp::MelSpectrogram> mels_;
  std::vector<std::pair<std::size_t, std::size_t>> refs_;
};

}  // namespace ssi::training
