#include "ssi/dsp/resample.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ssi/core/error.hpp"

namespace ssi::dsp {

namespace {
constexpr double kZeroCrossings = 16.0;
constexpr double kRolloff = 0.95;

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

double blackman(double u) {  // u in [-1, 1]
  const double x = std::numbers::pi * (u + 1.0);
  return 0.42 - 0.5 * std::cos(x) + 0.08 * std::cos(2.0 * x);
}
}  // namespace

Waveform resample(const Waveform& wav, double target_rate) {
  if (!(wav.sample_rate > 0) || !(target_rate > 0)) throw InvalidArgument("sample rates must be positive");
  if (target_rate == wav.sample_rate) return wav;
  const double ratio = target_rate / wav.sample_rate;
  const std::size_t n = wav.samples.size();
  const auto out_len = static_cast<std::size_t>(std::llround(static_cast<double>(n) * ratio));
  Waveform out{std::vector<double>(out_len, 0.0), target_rate};
  if (n == 0) return out;

  // Cutoff relative to the source Nyquist; lowered when decimating.
  const double cutoff = std::min(1.0, ratio) * kRolloff;
  const double half_width = kZeroCrossings / cutoff;
  for (std::size_t j = 0; j < out_len; ++j) {
    const double t = static_cast<double>(j) / ratio;
    const auto lo = static_cast<std::ptrdiff_t>(std::ceil(t - half_width));
    const auto hi = static_cast<std::ptrdiff_t>(std::floor(t + half_width));
    double acc = 0.0, weight = 0.0;
    for (std::ptrdiff_t k = std::max<std::ptrdiff_t>(lo, 0);
         k <= std::min<std::ptrdiff_t>(hi, static_cast<std::ptrdiff_t>(n) - 1); ++k) {
      const double d = t - static_cast<double>(k);
      const double w = cutoff * sinc(cutoff * d) * blackman(d / half_width);
      acc += w * wav.samples[static_cast<std::size_t>(k)];
      weight += w;
    }
    out.samples[j] = std::abs(weight) > 1e-12 ? acc / weight : 0.0;
  }
  return out;
}

}  // namespace ssi::dsp
