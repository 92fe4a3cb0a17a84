#include "ssi/dsp/mel.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "ssi/core/error.hpp"

namespace ssi::dsp {

void DspConfig::validate() const {
  if (!(sample_rate > 0)) throw InvalidArgument("sample_rate must be positive");
  stft_config(*this).validate();
  if (n_mels == 0) throw InvalidArgument("n_mels must be positive");
  if (!(fmin >= 0 && fmax > fmin && fmax <= sample_rate / 2)) {
    throw InvalidArgument("mel range must satisfy 0 <= fmin < fmax <= sample_rate/2");
  }
  if (!(log_floor > 0)) throw InvalidArgument("log_floor must be positive");
}

double hz_to_mel(double hz) noexcept { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) noexcept { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

StftConfig stft_config(const DspConfig& cfg) { return {cfg.win_length, cfg.hop, cfg.fft_size}; }

namespace {
std::vector<double> mel_edges_hz(const DspConfig& cfg) {
  const double lo = hz_to_mel(cfg.fmin), hi = hz_to_mel(cfg.fmax);
  std::vector<double> edges(cfg.n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(cfg.n_mels + 1));
  }
  return edges;
}
}  // namespace

std::vector<double> mel_center_frequencies(const DspConfig& cfg) {
  const auto edges = mel_edges_hz(cfg);
  return {edges.begin() + 1, edges.end() - 1};
}

Tensor mel_filterbank(const DspConfig& cfg) {
  cfg.validate();
  const auto edges = mel_edges_hz(cfg);
  const std::size_t bins = cfg.bins();
  Tensor fb({cfg.n_mels, bins}, 0.0);
  for (std::size_t m = 0; m < cfg.n_mels; ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * cfg.sample_rate / static_cast<double>(cfg.fft_size);
      const double up = (f - left) / (center - left);
      const double down = (right - f) / (right - center);
      fb[m * bins + k] = std::max(0.0, std::min(up, down));
    }
  }
  return fb;
}

Tensor log_mel_from_magnitude(const Tensor& magnitude, const DspConfig& cfg) {
  const std::size_t bins = cfg.bins();
  if (magnitude.rank() != 2 || magnitude.dim(1) != bins) {
    throw InvalidArgument("magnitude must be [T, " + std::to_string(bins) + "]");
  }
  const Tensor fb = mel_filterbank(cfg);
  const std::size_t frames = magnitude.dim(0);
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  RowMat power = Eigen::Map<const RowMat>(magnitude.data(), static_cast<Eigen::Index>(frames),
                                          static_cast<Eigen::Index>(bins))
                     .array()
                     .square();
  Eigen::Map<const RowMat> fbm(fb.data(), static_cast<Eigen::Index>(cfg.n_mels),
                               static_cast<Eigen::Index>(bins));
  Tensor out({frames, cfg.n_mels});
  Eigen::Map<RowMat> om(out.data(), static_cast<Eigen::Index>(frames),
                        static_cast<Eigen::Index>(cfg.n_mels));
  om.noalias() = power * fbm.transpose();
  for (auto& v : out.values()) v = std::log(std::max(v, cfg.log_floor));
  return out;
}

MelSpectrogram mel_spectrogram(const Waveform& wav, const DspConfig& cfg) {
  cfg.validate();
  if (std::abs(wav.sample_rate - cfg.sample_rate) > 1e-9) {
    throw InvalidArgument("mel_spectrogram expects audio at " + std::to_string(cfg.sample_rate) + " Hz");
  }
  const auto spec = stft(wav, stft_config(cfg));
  MelSpectrogram mel;
  mel.frames = log_mel_from_magnitude(magnitude(spec), cfg);
  mel.frame_rate = cfg.frame_rate();
  return mel;
}

Tensor invert_mel(const MelSpectrogram& mel, const DspConfig& cfg) {
  if (mel.normalization != MelNormalization::kRaw) {
    throw InvalidArgument("invert_mel needs a raw (destandardized) log-mel spectrogram");
  }
  if (mel.frames.rank() != 2 || mel.n_mels() != cfg.n_mels) {
    throw InvalidArgument("invert_mel: expected [T, " + std::to_string(cfg.n_mels) + "] frames");
  }
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Tensor fb = mel_filterbank(cfg);
  const auto n_mels = static_cast<Eigen::Index>(cfg.n_mels);
  const auto bins = static_cast<Eigen::Index>(cfg.bins());
  Eigen::Map<const RowMat> f(fb.data(), n_mels, bins);
  // pinv = F^T (F F^T + lambda I)^-1, lambda relative to the Gram diagonal.
  Eigen::MatrixXd gram = f * f.transpose();
  const double lambda = 1e-8 * gram.diagonal().mean();
  gram.diagonal().array() += lambda;
  const Eigen::MatrixXd solved = gram.ldlt().solve(Eigen::MatrixXd(f));  // [n_mels, bins]

  const std::size_t frames = mel.frame_count();
  RowMat mel_power = Eigen::Map<const RowMat>(mel.frames.data(), static_cast<Eigen::Index>(frames), n_mels)
                         .array()
                         .exp();
  Tensor out({frames, cfg.bins()});
  Eigen::Map<RowMat> om(out.data(), static_cast<Eigen::Index>(frames), bins);
  om.noalias() = mel_power * solved;
  // The clamped pseudo-inverse fills spectral valleys. Multiplicative
  // nonnegative updates on the relative residual (F p - m) / m then pull every
  // mel cell back onto its target, quiet cells included.
  for (auto& v : out.values()) v = std::max(v, cfg.log_floor);
  const RowMat inv_target = mel_power.cwiseInverse();
  const RowMat numer = inv_target * f;  // [frames, bins]
  RowMat projected(static_cast<Eigen::Index>(frames), n_mels);
  RowMat denom(static_cast<Eigen::Index>(frames), bins);
  for (std::size_t it = 0; it < cfg.mel_inverse_iters; ++it) {
    projected.noalias() = om * f.transpose();
    projected.array() *= inv_target.array().square();
    denom.noalias() = projected * f;
    om.array() *= numer.array() / denom.array().max(1e-300);
  }
  for (auto& v : out.values()) v = std::sqrt(std::max(v, 0.0));
  return out;
}

}  // namespace ssi::dsp
