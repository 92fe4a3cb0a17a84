#include "ssi/metrics/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ssi/core/error.hpp"
#include "ssi/dsp/mel.hpp"

namespace ssi::metrics {

namespace {

std::size_t common_length(const dsp::Waveform& ref, const dsp::Waveform& est) {
  if (ref.sample_rate != est.sample_rate) throw InvalidArgument("waveforms have different sample rates");
  const std::size_t n = std::min(ref.size(), est.size());
  if (n == 0) throw InvalidArgument("empty waveform");
  return n;
}

double ratio_db(double signal, double noise) {
  if (noise == 0.0) return signal == 0.0 ? -kDbCap : kDbCap;
  if (signal == 0.0) return -kDbCap;
  return std::clamp(10.0 * std::log10(signal / noise), -kDbCap, kDbCap);
}

}  // namespace

double sdr(const dsp::Waveform& ref, const dsp::Waveform& est) {
  const std::size_t n = common_length(ref, est);
  double signal = 0.0, noise = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = ref.samples[i], e = s - est.samples[i];
    signal += s * s;
    noise += e * e;
  }
  if (signal == 0.0) throw InvalidArgument("sdr: reference has no energy");
  return ratio_db(signal, noise);
}

double si_sdr(const dsp::Waveform& ref, const dsp::Waveform& est) {
  const std::size_t n = common_length(ref, est);
  double ss = 0.0, se = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ss += ref.samples[i] * ref.samples[i];
    se += ref.samples[i] * est.samples[i];
  }
  if (ss == 0.0) throw InvalidArgument("si_sdr: reference has no energy");
  const double alpha = se / ss;
  double signal = 0.0, noise = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = alpha * ref.samples[i], e = t - est.samples[i];
    signal += t * t;
    noise += e * e;
  }
  return ratio_db(signal, noise);
}

Tensor dct2_rows(const Tensor& x) {
  if (x.rank() != 2) throw InvalidArgument("dct2_rows expects [T, C]");
  const std::size_t t = x.dim(0), c = x.dim(1);
  std::vector<double> basis(c * c);
  for (std::size_t k = 0; k < c; ++k) {
    const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(c));
    for (std::size_t n = 0; n < c; ++n) {
      basis[k * c + n] =
          scale * std::cos(std::numbers::pi * static_cast<double>(k) * (2.0 * static_cast<double>(n) + 1.0) /
                           (2.0 * static_cast<double>(c)));
    }
  }
  Tensor y({t, c});
  for (std::size_t r = 0; r < t; ++r) {
    for (std::size_t k = 0; k < c; ++k) {
      double acc = 0.0;
      for (std::size_t n = 0; n < c; ++n) acc += basis[k * c + n] * x.data()[r * c + n];
      y.data()[r * c + k] = acc;
    }
  }
  return y;
}

double mcd_from_log_mel(const Tensor& ref, const Tensor& est) {
  if (ref.rank() != 2 || est.rank() != 2 || ref.dim(1) != est.dim(1)) {
    throw InvalidArgument("mcd expects [T, C] log-mel matrices with equal C");
  }
  const std::size_t c = ref.dim(1);
  if (c <= kMcdCoefficients) throw InvalidArgument("mcd needs more than 12 mel channels");
  const std::size_t t = std::min(ref.dim(0), est.dim(0));
  if (t == 0) throw InvalidArgument("mcd on empty input");
  const Tensor a = dct2_rows(ref), b = dct2_rows(est);
  const double k = 10.0 / std::numbers::ln10;
  double total = 0.0;
  for (std::size_t r = 0; r < t; ++r) {
    double acc = 0.0;
    for (std::size_t d = 1; d <= kMcdCoefficients; ++d) {
      const double diff = a.data()[r * c + d] - b.data()[r * c + d];
      acc += diff * diff;
    }
    total += k * std::sqrt(2.0 * acc);
  }
  return total / static_cast<double>(t);
}

double mcd(const dsp::Waveform& ref, const dsp::Waveform& est, const dsp::DspConfig& cfg) {
  return mcd_from_log_mel(dsp::mel_spectrogram(ref, cfg).frames, dsp::mel_spectrogram(est, cfg).frames);
}

}  // namespace ssi::metrics
