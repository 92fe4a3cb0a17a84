#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ssi/dataio/clip.hpp"
#include "ssi/dataio/formats.hpp"
#include "ssi/dsp/waveform.hpp"

namespace ssi::dataio {

/// Knobs of the synthetic paired corpus. A 4-D latent trajectory drives both
/// the rendered tongue images and the audio partials.
struct SynthConfig {
  std::size_t height = 64;
  std::size_t width = 946;
  double sample_rate = 22050.0;
  std::size_t hop = 269;         // audio samples per video frame
  double bump_amplitude = 150.0;
  double background = 30.0;
  double speckle_std = 12.0;
  double min_motion_hz = 0.4;    // latent sinusoid frequency range
  double max_motion_hz = 3.0;
  double noise_level = 0.03;     // broadband noise relative to the partials

  void validate() const;
};

inline constexpr std::size_t kLatentDims = 4;

struct SynthUtterance {
  UltrasoundClip clip;  // raw, 8-bit valued
  dsp::Waveform audio;
  Tensor latent;        // [T, 4], z at each video frame
};

struct SynthCorpus {
  std::vector<SynthUtterance> utterances;
  CorpusSplit split;
};

// Utterance i depends only on (seed, i); split fractions are 70/10/20.
SynthCorpus synth_corpus(std::uint64_t seed, std::size_t n_utts, std::size_t frames_per_utt,
                         const SynthConfig& cfg = {});

// Writes clips/<id>.uti, audio/<id>.wav and manifest.json under dir.
Manifest write_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir);

}  // namespace ssi::dataio
