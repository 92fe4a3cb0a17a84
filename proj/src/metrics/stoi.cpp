#include "ssi/metrics/stoi.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

#include "ssi/core/error.hpp"
#include "ssi/dsp/fft.hpp"
#include "ssi/dsp/resample.hpp"

namespace ssi::metrics {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Symmetric Hann of length n + 2 with both zero endpoints dropped.
std::vector<double> inner_hann(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i + 1) / static_cast<double>(n + 1));
  }
  return w;
}

// Frame starts 0, hop, ... strictly below n - frame.
std::size_t frame_count(std::size_t n, std::size_t frame, std::size_t hop) {
  return n <= frame ? 0 : (n - frame + hop - 1) / hop;
}

// Drops frames more than dyn_range below the loudest reference frame and
// overlap-adds the survivors of both signals.
void remove_silent_frames(std::vector<double>& x, std::vector<double>& y, const StoiParams& p) {
  const std::size_t hop = p.frame / 2;
  const std::size_t n = frame_count(x.size(), p.frame, hop);
  const auto w = inner_hann(p.frame);
  std::vector<double> energy(n);
  for (std::size_t f = 0; f < n; ++f) {
    double acc = 0.0;
    for (std::size_t i = 0; i < p.frame; ++i) {
      const double v = w[i] * x[f * hop + i];
      acc += v * v;
    }
    energy[f] = 20.0 * std::log10(std::sqrt(acc) + kEps);
  }
  if (n == 0) {
    x.clear();
    y.clear();
    return;
  }
  const double top = *std::max_element(energy.begin(), energy.end());
  std::vector<std::size_t> keep;
  for (std::size_t f = 0; f < n; ++f) {
    if (top - p.dyn_range_db - energy[f] < 0.0) keep.push_back(f);
  }
  const std::size_t out_len = (keep.size() - 1) * hop + p.frame;
  std::vector<double> xs(out_len, 0.0), ys(out_len, 0.0);
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const std::size_t src = keep[k] * hop, dst = k * hop;
    for (std::size_t i = 0; i < p.frame; ++i) {
      xs[dst + i] += w[i] * x[src + i];
      ys[dst + i] += w[i] * y[src + i];
    }
  }
  x = std::move(xs);
  y = std::move(ys);
}

// [bands, frames] third-octave envelopes sqrt(obm |X|^2).
Tensor band_envelopes(const std::vector<double>& x, const Tensor& obm, const StoiParams& p) {
  const std::size_t hop = p.frame / 2, bins = p.fft / 2 + 1;
  const std::size_t n = frame_count(x.size(), p.frame, hop);
  const auto w = inner_hann(p.frame);
  dsp::RealFft fft(p.fft);
  std::vector<double> buf(p.fft);
  std::vector<std::complex<double>> spec(bins);
  std::vector<double> power(bins);
  Tensor out({p.bands, n});
  for (std::size_t f = 0; f < n; ++f) {
    std::fill(buf.begin(), buf.end(), 0.0);
    for (std::size_t i = 0; i < p.frame; ++i) buf[i] = w[i] * x[f * hop + i];
    fft.forward(buf, spec);
    for (std::size_t k = 0; k < bins; ++k) power[k] = std::norm(spec[k]);
    for (std::size_t b = 0; b < p.bands; ++b) {
      double acc = 0.0;
      for (std::size_t k = 0; k < bins; ++k) acc += obm.data()[b * bins + k] * power[k];
      out.data()[b * n + f] = std::sqrt(acc);
    }
  }
  return out;
}

std::size_t segment_count(const StoiEnvelopes& env, const StoiParams& p) {
  const std::size_t frames = env.ref.dim(1);
  if (frames < p.segment) {
    throw TooShortError("intelligibility needs " + std::to_string(p.segment) + " frames after silence removal, got " +
                        std::to_string(frames));
  }
  return frames - p.segment + 1;
}

// Subtracts the mean of v and divides by (norm + eps).
void center_and_normalize(std::vector<double>& v) {
  double mean = 0.0;
  for (double e : v) mean += e;
  mean /= static_cast<double>(v.size());
  double norm = 0.0;
  for (double& e : v) {
    e -= mean;
    norm += e * e;
  }
  norm = std::sqrt(norm) + kEps;
  for (double& e : v) e /= norm;
}

}  // namespace

Tensor third_octave_matrix(const StoiParams& p) {
  const std::size_t bins = p.fft / 2 + 1;
  Tensor obm({p.bands, bins});
  auto nearest_bin = [&](double hz) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * p.sample_rate / static_cast<double>(p.fft);
      const double d = (f - hz) * (f - hz);
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    return best;
  };
  for (std::size_t b = 0; b < p.bands; ++b) {
    const double k = static_cast<double>(b);
    const std::size_t lo = nearest_bin(p.min_freq * std::pow(2.0, (2.0 * k - 1.0) / 6.0));
    const std::size_t hi = nearest_bin(p.min_freq * std::pow(2.0, (2.0 * k + 1.0) / 6.0));
    for (std::size_t j = lo; j < hi; ++j) obm.data()[b * bins + j] = 1.0;
  }
  return obm;
}

StoiEnvelopes stoi_envelopes(const dsp::Waveform& ref, const dsp::Waveform& est, const StoiParams& p) {
  if (ref.sample_rate != est.sample_rate) throw InvalidArgument("waveforms have different sample rates");
  const std::size_t n = std::min(ref.size(), est.size());
  dsp::Waveform r{std::vector<double>(ref.samples.begin(), ref.samples.begin() + static_cast<std::ptrdiff_t>(n)),
                  ref.sample_rate};
  dsp::Waveform e{std::vector<double>(est.samples.begin(), est.samples.begin() + static_cast<std::ptrdiff_t>(n)),
                  est.sample_rate};
  std::vector<double> x = dsp::resample(r, p.sample_rate).samples;
  std::vector<double> y = dsp::resample(e, p.sample_rate).samples;
  remove_silent_frames(x, y, p);
  const Tensor obm = third_octave_matrix(p);
  StoiEnvelopes env{band_envelopes(x, obm, p), band_envelopes(y, obm, p)};
  segment_count(env, p);
  return env;
}

double stoi_from_envelopes(const StoiEnvelopes& env, const StoiParams& p) {
  const std::size_t segments = segment_count(env, p);
  const std::size_t frames = env.ref.dim(1), len = p.segment;
  const double clip = std::pow(10.0, -p.beta_db / 20.0);
  std::vector<double> xs(len), ys(len);
  double total = 0.0;
  for (std::size_t s = 0; s < segments; ++s) {
    for (std::size_t b = 0; b < p.bands; ++b) {
      const double* xr = env.ref.data() + b * frames + s;
      const double* yr = env.est.data() + b * frames + s;
      double xn = 0.0, yn = 0.0;
      for (std::size_t i = 0; i < len; ++i) {
        xn += xr[i] * xr[i];
        yn += yr[i] * yr[i];
      }
      const double scale = std::sqrt(xn) / (std::sqrt(yn) + kEps);
      for (std::size_t i = 0; i < len; ++i) {
        xs[i] = xr[i];
        ys[i] = std::min(yr[i] * scale, xr[i] * (1.0 + clip));
      }
      center_and_normalize(xs);
      center_and_normalize(ys);
      for (std::size_t i = 0; i < len; ++i) total += xs[i] * ys[i];
    }
  }
  return total / static_cast<double>(p.bands * segments);
}

double estoi_from_envelopes(const StoiEnvelopes& env, const StoiParams& p) {
  const std::size_t segments = segment_count(env, p);
  const std::size_t frames = env.ref.dim(1), len = p.segment, bands = p.bands;
  // Rows (bands over time) then columns (spectra per frame) are normalized.
  auto normalize = [&](const Tensor& src, std::size_t s) {
    std::vector<double> m(bands * len), v(len);
    for (std::size_t b = 0; b < bands; ++b) {
      std::copy_n(src.data() + b * frames + s, len, v.begin());
      center_and_normalize(v);
      std::copy(v.begin(), v.end(), m.begin() + static_cast<std::ptrdiff_t>(b * len));
    }
    std::vector<double> col(bands);
    for (std::size_t i = 0; i < len; ++i) {
      for (std::size_t b = 0; b < bands; ++b) col[b] = m[b * len + i];
      center_and_normalize(col);
      for (std::size_t b = 0; b < bands; ++b) m[b * len + i] = col[b];
    }
    return m;
  };
  double total = 0.0;
  for (std::size_t s = 0; s < segments; ++s) {
    const auto xm = normalize(env.ref, s), ym = normalize(env.est, s);
    double acc = 0.0;
    for (std::size_t k = 0; k < xm.size(); ++k) acc += xm[k] * ym[k];
    total += acc / static_cast<double>(len);
  }
  return total / static_cast<double>(segments);
}

double stoi(const dsp::Waveform& ref, const dsp::Waveform& est, const StoiParams& p) {
  return stoi_from_envelopes(stoi_envelopes(ref, est, p), p);
}

double estoi(const dsp::Waveform& ref, const dsp::Waveform& est, const StoiParams& p) {
  return estoi_from_envelopes(stoi_envelopes(ref, est, p), p);
}

}  // namespace ssi::metrics
