#include "ssi/metrics/regression.hpp"

#include <vector>

#include "ssi/core/error.hpp"

namespace ssi::metrics {
namespace {

void require_match(const Tensor& pred, const Tensor& target, const char* what) {
  if (pred.shape() != target.shape()) {
    throw InvalidArgument(std::string(what) + ": shape mismatch " + shape_to_string(pred.shape()) + " vs " +
                          shape_to_string(target.shape()));
  }
}

}  // namespace

double spectral_mse(const Tensor& pred, const Tensor& target) {
  require_match(pred, target, "spectral_mse");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    acc += d * d;
  }
  return acc / static_cast<double>(pred.size());
}

R2Score mean_r2_detail(const Tensor& pred, const Tensor& target) {
  require_match(pred, target, "mean_r2");
  const std::size_t channels = target.shape().back();
  const std::size_t rows = target.size() / channels;
  std::vector<double> mean(channels, 0.0), ss_tot(channels, 0.0), ss_res(channels, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < channels; ++c) mean[c] += target[r * channels + c];
  }
  for (auto& m : mean) m /= static_cast<double>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double t = target[r * channels + c];
      const double e = pred[r * channels + c] - t;
      ss_tot[c] += (t - mean[c]) * (t - mean[c]);
      ss_res[c] += e * e;
    }
  }
  R2Score score;
  double acc = 0.0;
  for (std::size_t c = 0; c < channels; ++c) {
    if (ss_tot[c] <= 0.0) {
      ++score.skipped;
      continue;
    }
    acc += 1.0 - ss_res[c] / ss_tot[c];
    ++score.channels;
  }
  score.mean = score.channels > 0 ? acc / static_cast<double>(score.channels) : 0.0;
  return score;
}

double mean_r2(const Tensor& pred, const Tensor& target) { return mean_r2_detail(pred, target).mean; }

}  // namespace ssi::metrics
