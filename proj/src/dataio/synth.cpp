#include "ssi/dataio/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "ssi/core/error.hpp"
#include "ssi/core/rng.hpp"

namespace ssi::dataio {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::array<int, kLatentDims> kHarmonics = {1, 3, 8, 17};
constexpr double kBaseF0 = 180.0;

// z_d(t) = sum_j a_j sin(2 pi f_j t + phi_j) with sum_j a_j = 1.
struct Latent {
  std::array<std::array<double, 3>, kLatentDims> amp, freq, phase;

  static Latent draw(Rng rng, const SynthConfig& cfg) {
    Latent z;
    for (std::size_t d = 0; d < kLatentDims; ++d) {
      double total = 0.0;
      for (std::size_t j = 0; j < 3; ++j) {
        z.amp[d][j] = rng.uniform(0.5, 1.0);
        z.freq[d][j] = rng.uniform(cfg.min_motion_hz, cfg.max_motion_hz);
        z.phase[d][j] = rng.uniform(0.0, kTwoPi);
        total += z.amp[d][j];
      }
      for (auto& a : z.amp[d]) a /= total;
    }
    return z;
  }

  std::array<double, kLatentDims> at(double t) const {
    std::array<double, kLatentDims> v{};
    for (std::size_t d = 0; d < kLatentDims; ++d) {
      for (std::size_t j = 0; j < 3; ++j) v[d] += amp[d][j] * std::sin(kTwoPi * freq[d][j] * t + phase[d][j]);
    }
    return v;
  }
};

void render_frame(const std::array<double, kLatentDims>& z, const SynthConfig& cfg, Rng& speckle, double* out,
                  std::vector<double>& rows, std::vector<double>& cols) {
  const std::size_t h = cfg.height, w = cfg.width;
  const double hd = static_cast<double>(h), wd = static_cast<double>(w);
  std::fill(out, out + h * w, cfg.background);
  rows.resize(h);
  cols.resize(w);
  for (std::size_t k = 0; k < kLatentDims; ++k) {
    const double cx = wd * (0.2 + 0.2 * static_cast<double>(k)) + 0.07 * wd * z[k];
    const double cy = hd * (0.5 + 0.22 * z[(k + 1) % kLatentDims]);
    const double sx = 0.05 * wd, sy = 0.12 * hd;
    const double a = cfg.bump_amplitude * (0.75 + 0.25 * z[(k + 2) % kLatentDims]);
    for (std::size_t y = 0; y < h; ++y) rows[y] = a * std::exp(-0.5 * std::pow((static_cast<double>(y) - cy) / sy, 2));
    for (std::size_t x = 0; x < w; ++x) cols[x] = std::exp(-0.5 * std::pow((static_cast<double>(x) - cx) / sx, 2));
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) out[y * w + x] += rows[y] * cols[x];
    }
  }
  for (std::size_t i = 0; i < h * w; ++i) {
    // Adding +0.0 turns a rounded -0.0 into +0.0 so pixels are canonical 8-bit values.
    out[i] = std::clamp(std::round(out[i] + cfg.speckle_std * speckle.normal()), 0.0, 255.0) + 0.0;
  }
}

SynthUtterance render_utterance(const Rng& rng, std::string id, std::size_t frames, const SynthConfig& cfg) {
  const Latent latent = Latent::draw(rng.split("latent"), cfg);
  const double fps = cfg.sample_rate / static_cast<double>(cfg.hop);
  SynthUtterance u;
  u.clip = {Tensor({frames, cfg.height, cfg.width}), fps, std::move(id)};
  u.latent = Tensor({frames, kLatentDims});
  Rng speckle = rng.split("speckle");
  std::vector<double> rows, cols;
  for (std::size_t f = 0; f < frames; ++f) {
    const auto z = latent.at(static_cast<double>(f) / fps);
    std::copy(z.begin(), z.end(), u.latent.data() + f * kLatentDims);
    render_frame(z, cfg, speckle, u.clip.frames.data() + f * cfg.height * cfg.width, rows, cols);
  }

  const std::size_t n = frames * cfg.hop;
  u.audio = {std::vector<double>(n), cfg.sample_rate};
  Rng noise = rng.split("noise");
  double phase = 0.0, peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto z = latent.at(static_cast<double>(i) / cfg.sample_rate);
    phase += kTwoPi * kBaseF0 * (1.0 + 0.15 * z[0]) / cfg.sample_rate;
    double v = 0.0;
    for (std::size_t k = 0; k < kLatentDims; ++k) {
      v += 0.25 * (1.1 + z[k]) * std::sin(kHarmonics[k] * phase);
    }
    v += cfg.noise_level * (0.6 + 0.4 * z[1]) * noise.normal();
    u.audio.samples[i] = v;
    peak = std::max(peak, std::abs(v));
  }
  if (peak > 0) {
    for (auto& s : u.audio.samples) s *= 0.8 / peak;
  }
  return u;
}

}  // namespace

void SynthConfig::validate() const {
  if (height == 0 || width == 0) throw InvalidArgument("synthetic frame size must be positive");
  if (!(sample_rate > 0) || hop == 0) throw InvalidArgument("synthetic audio rate and hop must be positive");
  if (!(min_motion_hz > 0 && max_motion_hz >= min_motion_hz)) {
    throw InvalidArgument("latent motion frequencies must satisfy 0 < min <= max");
  }
  if (speckle_std < 0 || noise_level < 0) throw InvalidArgument("noise levels must be non-negative");
}

SynthCorpus synth_corpus(std::uint64_t seed, std::size_t n_utts, std::size_t frames_per_utt,
                         const SynthConfig& cfg) {
  cfg.validate();
  if (n_utts < 3) throw InvalidArgument("a synthetic corpus needs at least 3 utterances for three splits");
  if (frames_per_utt == 0) throw InvalidArgument("frames_per_utt must be positive");
  const Rng root(seed);
  SynthCorpus corpus;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n_utts; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "utt%04zu", i);
    ids.emplace_back(id);
    corpus.utterances.push_back(render_utterance(root.split(std::uint64_t{i}), id, frames_per_utt, cfg));
  }
  Rng split_rng = root.split("split");
  split_rng.shuffle(ids);
  const std::size_t n_dev = std::max<std::size_t>(1, n_utts / 10);
  const std::size_t n_test = std::max<std::size_t>(1, n_utts / 5);
  corpus.split.dev.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_dev));
  corpus.split.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_dev),
                           ids.begin() + static_cast<std::ptrdiff_t>(n_dev + n_test));
  corpus.split.train.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_dev + n_test), ids.end());
  for (auto* list : {&corpus.split.train, &corpus.split.dev, &corpus.split.test}) std::sort(list->begin(), list->end());
  return corpus;
}

Manifest write_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir) {
  Manifest m;
  m.root = dir;
  for (const auto& u : corpus.utterances) {
    const std::string& id = u.clip.utterance_id;
    ManifestEntry e{id, "clips/" + id + ".uti", "audio/" + id + ".wav", Split::kTrain};
    if (std::find(corpus.split.dev.begin(), corpus.split.dev.end(), id) != corpus.split.dev.end()) e.split = Split::kDev;
    if (std::find(corpus.split.test.begin(), corpus.split.test.end(), id) != corpus.split.test.end()) e.split = Split::kTest;
    save_uti(u.clip, dir / e.clip);
    save_wav(u.audio, dir / e.audio);
    m.entries.push_back(std::move(e));
  }
  save_manifest(m, dir / "manifest.json");
  return m;
}

}  // namespace ssi::dataio
