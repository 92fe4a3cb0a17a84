#include "ssi/dataio/formats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <set>

#include "ssi/core/error.hpp"

namespace ssi::dataio {
namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("short write to " + path.string());
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::uint64_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) throw FormatError(std::string("truncated ") + what, pos_);
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | bytes_[pos_ + static_cast<std::size_t>(i)];
    pos_ += 4;
    return v;
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    const std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  double f64(const char* what) {
    const std::uint64_t lo = u32(what), hi = u32(what);
    return std::bit_cast<double>(lo | (hi << 32));
  }
  std::string tag(const char* what) {
    need(4, what);
    std::string s(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + 4));
    pos_ += 4;
    return s;
  }
  const std::uint8_t* take(std::size_t n, const char* what) {
    need(n, what);
    const std::uint8_t* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  void skip(std::size_t n, const char* what) { take(n, what); }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

class Writer {
 public:
  void tag(std::string_view s) { bytes.insert(bytes.end(), s.begin(), s.end()); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u16(std::uint16_t v) {
    bytes.push_back(static_cast<std::uint8_t>(v));
    bytes.push_back(static_cast<std::uint8_t>(v >> 8));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    u32(static_cast<std::uint32_t>(bits));
    u32(static_cast<std::uint32_t>(bits >> 32));
  }

  std::vector<std::uint8_t> bytes;
};

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > 0xffffffffu) throw InvalidArgument(std::string(what) + " does not fit in 32 bits");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

UltrasoundClip load_uti(const fs::path& path) {
  const auto bytes = read_file(path);
  Reader r(bytes);
  if (r.tag("magic") != "UTI1") throw FormatError("bad UTI1 magic in " + path.string(), 0);
  const std::uint32_t t = r.u32("header"), h = r.u32("header"), w = r.u32("header");
  const float fps = r.f32("header");
  if (t == 0 || h == 0 || w == 0) throw FormatError("zero extent in UTI1 header", 4);
  if (!(std::isfinite(fps) && fps > 0)) throw FormatError("non-positive fps in UTI1 header", 16);
  const std::size_t n = std::size_t{t} * h * w;
  const std::uint8_t* px = r.take(n, "UTI1 pixel payload");
  if (r.remaining() != 0) throw FormatError("trailing bytes after UTI1 payload", r.offset());
  UltrasoundClip clip;
  clip.frames = Tensor({t, h, w});
  std::transform(px, px + n, clip.frames.data(), [](std::uint8_t v) { return static_cast<double>(v); });
  clip.fps = fps;
  clip.utterance_id = path.stem().string();
  return clip;
}

void save_uti(const UltrasoundClip& clip, const fs::path& path) {
  if (clip.frames.rank() != 3) throw InvalidArgument("UTI1 clips must be [T, H, W]");
  Writer w;
  w.tag("UTI1");
  w.u32(checked_u32(clip.frame_count(), "frame count"));
  w.u32(checked_u32(clip.height(), "height"));
  w.u32(checked_u32(clip.width(), "width"));
  w.f32(static_cast<float>(clip.fps));
  w.bytes.reserve(kUtiHeaderBytes + clip.frames.size());
  for (double v : clip.frames.values()) {
    if (!(v >= 0.0 && v <= 255.0) || v != std::floor(v)) {
      throw InvalidArgument("UTI1 pixels must be integers in [0, 255]");
    }
    w.bytes.push_back(static_cast<std::uint8_t>(v));
  }
  write_file(path, w.bytes);
}

dsp::MelSpectrogram load_mel(const fs::path& path) {
  const auto bytes = read_file(path);
  Reader r(bytes);
  if (r.tag("magic") != "MEL1") throw FormatError("bad MEL1 magic in " + path.string(), 0);
  const std::uint32_t frames = r.u32("header"), n_mels = r.u32("header");
  const float rate = r.f32("header");
  if (frames == 0 || n_mels == 0) throw FormatError("zero extent in MEL1 header", 4);
  r.need(std::size_t{frames} * n_mels * 8, "MEL1 payload");
  dsp::MelSpectrogram mel;
  mel.frames = Tensor({frames, n_mels});
  for (auto& v : mel.frames.values()) v = r.f64("MEL1 payload");
  if (r.remaining() != 0) throw FormatError("trailing bytes after MEL1 payload", r.offset());
  mel.frame_rate = rate;
  return mel;
}

void save_mel(const dsp::MelSpectrogram& mel, const fs::path& path) {
  if (mel.frames.rank() != 2) throw InvalidArgument("MEL1 spectrograms must be [T, n_mels]");
  Writer w;
  w.tag("MEL1");
  w.u32(checked_u32(mel.frame_count(), "frame count"));
  w.u32(checked_u32(mel.n_mels(), "n_mels"));
  w.f32(static_cast<float>(mel.frame_rate));
  for (double v : mel.frames.values()) w.f64(v);
  write_file(path, w.bytes);
}

dsp::Waveform load_wav(const fs::path& path) {
  const auto bytes = read_file(path);
  Reader r(bytes);
  if (r.tag("RIFF header") != "RIFF") throw FormatError("not a RIFF file: " + path.string(), 0);
  r.u32("RIFF size");
  if (r.tag("WAVE tag") != "WAVE") throw FormatError("not a WAVE file", 8);
  bool have_fmt = false;
  std::uint32_t rate = 0;
  while (r.remaining() > 0) {
    const std::uint64_t chunk_at = r.offset();
    const std::string id = r.tag("chunk id");
    const std::uint32_t size = r.u32("chunk size");
    if (id == "fmt ") {
      if (size < 16) throw FormatError("short fmt chunk", chunk_at);
      const std::uint16_t format = r.u16("fmt"), channels = r.u16("fmt");
      rate = r.u32("fmt");
      r.u32("fmt");
      r.u16("fmt");
      const std::uint16_t bits = r.u16("fmt");
      if (format != 1 || bits != 16) throw FormatError("only 16-bit PCM WAV is supported", chunk_at + 8);
      if (channels != 1) throw FormatError("only mono WAV is supported", chunk_at + 10);
      r.skip(size - 16 + (size & 1u), "fmt chunk");
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw FormatError("data chunk before fmt chunk", chunk_at);
      const std::uint8_t* p = r.take(size, "WAV sample data");
      dsp::Waveform wav{std::vector<double>(size / 2), static_cast<double>(rate)};
      for (std::size_t i = 0; i < wav.samples.size(); ++i) {
        const auto s = static_cast<std::int16_t>(p[2 * i] | (p[2 * i + 1] << 8));
        wav.samples[i] = static_cast<double>(s) / 32768.0;
      }
      return wav;
    } else {
      r.skip(size + (size & 1u), "chunk body");
    }
  }
  throw FormatError("WAV file has no data chunk", r.offset());
}

void save_wav(const dsp::Waveform& wav, const fs::path& path) {
  if (!(wav.sample_rate > 0) || wav.sample_rate != std::floor(wav.sample_rate)) {
    throw InvalidArgument("WAV sample rate must be a positive integer");
  }
  const auto data_bytes = checked_u32(wav.samples.size() * 2, "WAV data size");
  const auto rate = static_cast<std::uint32_t>(wav.sample_rate);
  Writer w;
  w.tag("RIFF");
  w.u32(36 + data_bytes);
  w.tag("WAVE");
  w.tag("fmt ");
  w.u32(16);
  w.u16(1);
  w.u16(1);
  w.u32(rate);
  w.u32(rate * 2);
  w.u16(2);
  w.u16(16);
  w.tag("data");
  w.u32(data_bytes);
  for (double v : wav.samples) {
    const double c = std::clamp(v, -1.0, 1.0);
    const auto s = static_cast<std::int16_t>(std::clamp(std::lround(c * 32768.0), -32768L, 32767L));
    w.u16(static_cast<std::uint16_t>(s));
  }
  write_file(path, w.bytes);
}

std::string to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "train";
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "dev") return Split::kDev;
  if (name == "test") return Split::kTest;
  throw InvalidArgument("unknown split '" + name + "' (expected train, dev or test)");
}

const std::vector<std::string>& CorpusSplit::ids(Split split) const {
  switch (split) {
    case Split::kTrain: return train;
    case Split::kDev: return dev;
    case Split::kTest: return test;
  }
  return train;
}

void CorpusSplit::validate() const {
  std::set<std::string> seen;
  for (const auto* list : {&train, &dev, &test}) {
    for (const auto& id : *list) {
      if (!seen.insert(id).second) throw InvalidArgument("utterance '" + id + "' is in two splits");
    }
  }
}

CorpusSplit Manifest::split() const {
  CorpusSplit s;
  for (const auto& e : entries) {
    switch (e.split) {
      case Split::kTrain: s.train.push_back(e.id); break;
      case Split::kDev: s.dev.push_back(e.id); break;
      case Split::kTest: s.test.push_back(e.id); break;
    }
  }
  return s;
}

const ManifestEntry& Manifest::entry(const std::string& id) const {
  for (const auto& e : entries) {
    if (e.id == id) return e;
  }
  throw InvalidArgument("utterance '" + id + "' is not in the manifest");
}

Manifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("manifest is not valid JSON: ") + e.what(), e.byte);
  }
  Manifest m;
  m.root = path.parent_path();
  try {
    for (const auto& u : j.at("utterances")) {
      m.entries.push_back({u.at("id").get<std::string>(), u.at("clip").get<std::string>(),
                           u.at("audio").get<std::string>(), parse_split(u.at("split").get<std::string>())});
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what(), 0);
  }
  m.split().validate();
  return m;
}

void save_manifest(const Manifest& manifest, const fs::path& path) {
  nlohmann::json j;
  j["format"] = "ssi-manifest";
  j["utterances"] = nlohmann::json::array();
  for (const auto& e : manifest.entries) {
    j["utterances"].push_back({{"id", e.id}, {"clip", e.clip}, {"audio", e.audio}, {"split", to_string(e.split)}});
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write manifest " + path.string());
}

}  // namespace ssi::dataio
