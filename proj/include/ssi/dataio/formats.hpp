#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ssi/dataio/clip.hpp"
#include "ssi/dsp/mel.hpp"
#include "ssi/dsp/waveform.hpp"

namespace ssi::dataio {

// UTI1: "UTI1" | u32 frames | u32 height | u32 width | f32 fps | u8 pixels.
inline constexpr std::size_t kUtiHeaderBytes = 20;
// MEL1: "MEL1" | u32 frames | u32 n_mels | f32 frame_rate | f64 values.
inline constexpr std::size_t kMelHeaderBytes = 16;

UltrasoundClip load_uti(const std::filesystem::path& path);
// Pixels must be integers in [0, 255].
void save_uti(const UltrasoundClip& clip, const std::filesystem::path& path);

dsp::MelSpectrogram load_mel(const std::filesystem::path& path);
void save_mel(const dsp::MelSpectrogram& mel, const std::filesystem::path& path);

// Mono 16-bit PCM. Samples outside [-1, 1] are clipped on write.
dsp::Waveform load_wav(const std::filesystem::path& path);
void save_wav(const dsp::Waveform& wav, const std::filesystem::path& path);

enum class Split { kTrain, kDev, kTest };
std::string to_string(Split split);
Split parse_split(const std::string& name);

struct CorpusSplit {
  std::vector<std::string> train, dev, test;

  const std::vector<std::string>& ids(Split split) const;
  // Throws InvalidArgument when an id appears in more than one list.
  void validate() const;
};

struct ManifestEntry {
  std::string id;
  std::string clip;   // paths relative to the manifest directory
  std::string audio;
  Split split = Split::kTrain;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  std::filesystem::path root;  // directory the relative paths resolve against

  CorpusSplit split() const;
  const ManifestEntry& entry(const std::string& id) const;
  std::filesystem::path resolve(const std::string& relative) const { return root / relative; }
};

Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

}  // namespace ssi::dataio
