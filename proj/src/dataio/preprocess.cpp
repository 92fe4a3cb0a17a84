#include "ssi/dataio/preprocess.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>
#include <cmath>

#include "ssi/core/error.hpp"

namespace ssi::dataio {
namespace {

double cubic_weight(double x) {
  constexpr double a = -0.5;
  x = std::abs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

struct Taps {
  std::array<std::size_t, 4> index;
  std::array<double, 4> weight;
};

std::vector<Taps> axis_taps(std::size_t in, std::size_t out) {
  std::vector<Taps> taps(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  const auto last = static_cast<std::ptrdiff_t>(in) - 1;
  for (std::size_t o = 0; o < out; ++o) {
    const double src = (static_cast<double>(o) + 0.5) * scale - 0.5;
    const double base = std::floor(src);
    const double t = src - base;
    for (int k = 0; k < 4; ++k) {
      const auto i = static_cast<std::ptrdiff_t>(base) + k - 1;
      taps[o].index[static_cast<std::size_t>(k)] = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, last));
      taps[o].weight[static_cast<std::size_t>(k)] = cubic_weight(t - (k - 1));
    }
  }
  return taps;
}

void resize_into(const double* src, std::size_t h, std::size_t w, const std::vector<Taps>& rows,
                 const std::vector<Taps>& cols, std::vector<double>& scratch, double* dst) {
  const std::size_t oh = rows.size(), ow = cols.size();
  scratch.assign(h * ow, 0.0);
  for (std::size_t y = 0; y < h; ++y) {
    const double* line = src + y * w;
    for (std::size_t x = 0; x < ow; ++x) {
      const auto& t = cols[x];
      scratch[y * ow + x] = t.weight[0] * line[t.index[0]] + t.weight[1] * line[t.index[1]] +
                            t.weight[2] * line[t.index[2]] + t.weight[3] * line[t.index[3]];
    }
  }
  for (std::size_t y = 0; y < oh; ++y) {
    const auto& t = rows[y];
    for (std::size_t x = 0; x < ow; ++x) {
      dst[y * ow + x] = t.weight[0] * scratch[t.index[0] * ow + x] + t.weight[1] * scratch[t.index[1] * ow + x] +
                        t.weight[2] * scratch[t.index[2] * ow + x] + t.weight[3] * scratch[t.index[3] * ow + x];
    }
  }
}

}  // namespace

Tensor bicubic_resize(const Tensor& frame, std::size_t out_height, std::size_t out_width) {
  if (frame.rank() != 2) throw InvalidArgument("bicubic_resize expects an [H, W] frame");
  if (out_height == 0 || out_width == 0) throw InvalidArgument("bicubic_resize target must be non-empty");
  Tensor out({out_height, out_width});
  std::vector<double> scratch;
  resize_into(frame.data(), frame.dim(0), frame.dim(1), axis_taps(frame.dim(0), out_height),
              axis_taps(frame.dim(1), out_width), scratch, out.data());
  return out;
}

UltrasoundClip resize_clip(const UltrasoundClip& clip, std::size_t out_height, std::size_t out_width) {
  if (clip.frames.rank() != 3) throw InvalidArgument("clip frames must be [T, H, W]");
  const std::size_t t = clip.frame_count(), h = clip.height(), w = clip.width();
  const auto rows = axis_taps(h, out_height);
  const auto cols = axis_taps(w, out_width);
  UltrasoundClip out{Tensor({t, out_height, out_width}), clip.fps, clip.utterance_id};
  std::vector<double> scratch;
  for (std::size_t f = 0; f < t; ++f) {
    resize_into(clip.frames.data() + f * h * w, h, w, rows, cols, scratch,
                out.frames.data() + f * out_height * out_width);
  }
  return out;
}

UltrasoundClip minmax_scale(const UltrasoundClip& clip) {
  const auto [lo_it, hi_it] = std::minmax_element(clip.frames.values().begin(), clip.frames.values().end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) {
    spdlog::warn("clip '{}' is constant; min-max scaling maps it to zeros", clip.utterance_id);
    return {Tensor(clip.frames.shape(), 0.0), clip.fps, clip.utterance_id};
  }
  UltrasoundClip out = clip;
  const double span = hi - lo;
  for (auto& v : out.frames.values()) v = 2.0 * (v - lo) / span - 1.0;
  // Pin the extremes so rounding cannot leave them a ulp inside the range.
  for (std::size_t i = 0; i < out.frames.size(); ++i) {
    if (clip.frames[i] == lo) out.frames[i] = -1.0;
    if (clip.frames[i] == hi) out.frames[i] = 1.0;
  }
  return out;
}

UltrasoundClip minmax_scale(const UltrasoundClip& clip, double lo, double hi) {
  if (!(hi > lo)) throw InvalidArgument("minmax_scale bounds must satisfy hi > lo");
  UltrasoundClip out = clip;
  for (auto& v : out.frames.values()) v = std::clamp(2.0 * (v - lo) / (hi - lo) - 1.0, -1.0, 1.0);
  return out;
}

UltrasoundClip preprocess_clip(const UltrasoundClip& raw) { return minmax_scale(resize_clip(raw)); }

MelNormStats compute_norm_stats(std::span<const dsp::MelSpectrogram> mels) {
  if (mels.empty()) throw InvalidArgument("compute_norm_stats needs at least one spectrogram");
  const std::size_t n_mels = mels.front().n_mels();
  std::vector<double> sum(n_mels, 0.0);
  std::size_t count = 0;
  for (const auto& mel : mels) {
    if (mel.normalization != dsp::MelNormalization::kRaw || mel.n_mels() != n_mels) {
      throw InvalidArgument("compute_norm_stats needs raw spectrograms with equal channel counts");
    }
    for (std::size_t t = 0; t < mel.frame_count(); ++t) {
      for (std::size_t m = 0; m < n_mels; ++m) sum[m] += mel.frames[t * n_mels + m];
    }
    count += mel.frame_count();
  }
  MelNormStats stats{std::vector<double>(n_mels), std::vector<double>(n_mels, 0.0)};
  for (std::size_t m = 0; m < n_mels; ++m) stats.mean[m] = sum[m] / static_cast<double>(count);
  for (const auto& mel : mels) {
    for (std::size_t t = 0; t < mel.frame_count(); ++t) {
      for (std::size_t m = 0; m < n_mels; ++m) {
        const double d = mel.frames[t * n_mels + m] - stats.mean[m];
        stats.std[m] += d * d;
      }
    }
  }
  for (auto& s : stats.std) {
    s = std::sqrt(s / static_cast<double>(count));
    if (s < 1e-8) s = 1.0;
  }
  return stats;
}

dsp::MelSpectrogram standardize_mel(const dsp::MelSpectrogram& mel, const MelNormStats& stats) {
  if (mel.normalization != dsp::MelNormalization::kRaw) throw InvalidArgument("mel is already standardized");
  const std::size_t n_mels = mel.n_mels();
  if (stats.mean.size() != n_mels || stats.std.size() != n_mels) {
    throw InvalidArgument("normalization stats do not match the mel channel count");
  }
  dsp::MelSpectrogram out = mel;
  for (std::size_t t = 0; t < mel.frame_count(); ++t) {
    for (std::size_t m = 0; m < n_mels; ++m) {
      auto& v = out.frames[t * n_mels + m];
      v = (v - stats.mean[m]) / stats.std[m];
    }
  }
  out.normalization = dsp::MelNormalization::kStandardized;
  out.mean = stats.mean;
  out.std = stats.std;
  return out;
}

dsp::MelSpectrogram destandardize_mel(const dsp::MelSpectrogram& mel) {
  if (mel.normalization != dsp::MelNormalization::kStandardized) {
    throw InvalidArgument("mel is not standardized");
  }
  const std::size_t n_mels = mel.n_mels();
  dsp::MelSpectrogram out = mel;
  for (std::size_t t = 0; t < mel.frame_count(); ++t) {
    for (std::size_t m = 0; m < n_mels; ++m) {
      auto& v = out.frames[t * n_mels + m];
      v = v * mel.std[m] + mel.mean[m];
    }
  }
  out.normalization = dsp::MelNormalization::kRaw;
  out.mean.clear();
  out.std.clear();
  return out;
}

}  // namespace ssi::dataio
