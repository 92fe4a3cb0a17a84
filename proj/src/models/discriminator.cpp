#include "ssi/models/discriminator.hpp"

#include <sstream>

#include "ssi/core/autograd.hpp"
#include "ssi/core/error.hpp"
#include "ssi/core/rng.hpp"

namespace ssi::models {
namespace {

constexpr std::size_t kStridedLayers = 3;
constexpr std::size_t kStridedKernel = 4;
constexpr std::size_t kFourthKernel = 2;
constexpr std::size_t kLastKernel = 4;
constexpr std::size_t kPad = 1;

}  // namespace

DiscriminatorConfig DiscriminatorConfig::miniature() {
  DiscriminatorConfig c;
  c.filters = {4, 4, 4, 4};
  return c;
}

std::array<std::size_t, 2> DiscriminatorConfig::output_extent() const {
  std::array<std::size_t, 2> s = {n_mels, frames};
  for (std::size_t l = 0; l < kStridedLayers; ++l) {
    for (auto& e : s) e = conv_output_extent(e, kStridedKernel, 2, Padding::kSame);
  }
  for (std::size_t k : {kFourthKernel, kLastKernel}) {
    for (auto& e : s) {
      e += 2 * kPad;
      if (e < k) return {0, 0};
      e = e - k + 1;
    }
  }
  return s;
}

std::string DiscriminatorConfig::descriptor() const {
  std::ostringstream os;
  os << "discriminator in=" << n_mels << 'x' << frames << " filters=" << filters[0] << ',' << filters[1] << ','
     << filters[2] << ',' << filters[3] << " bn=" << (bn_after_activation ? "post" : "pre");
  return os.str();
}

void DiscriminatorConfig::validate() const {
  for (std::size_t f : filters) {
    if (f == 0) throw InvalidArgument("discriminator filter counts must be positive");
  }
  if (n_mels == 0 || frames == 0) throw InvalidArgument("discriminator input extents must be positive");
  if (output_count() == 0) throw InvalidArgument("discriminator input too small: " + descriptor());
}

Discriminator::Discriminator(DiscriminatorConfig cfg) : cfg_(cfg) { cfg_.validate(); }

ModelParams Discriminator::init_params(std::uint64_t seed) const {
  const Rng root(seed);
  ModelParams p(cfg_.descriptor());
  const std::array<std::size_t, 5> kernel = {kStridedKernel, kStridedKernel, kStridedKernel, kFourthKernel, kLastKernel};
  std::size_t cin = 1;
  for (std::size_t l = 0; l < 5; ++l) {
    const std::size_t cout = l < 4 ? cfg_.filters[l] : 1;
    const std::string name = "conv" + std::to_string(l + 1);
    const std::size_t k = kernel[l];
    p.add(name + "/kernel", ParamKind::kWeight, he_uniform({k, k, cin, cout}, k * k * cin, root.split(name).next_u64()));
    p.add(name + "/bias", ParamKind::kBias, Tensor({cout}));
    if (l < 4) {
      const std::string bn = "bn" + std::to_string(l + 1);
      p.add(bn + "/gamma", ParamKind::kGamma, Tensor({cout}, 1.0));
      p.add(bn + "/beta", ParamKind::kBeta, Tensor({cout}, 0.0));
      p.add(bn + "/running_mean", ParamKind::kRunningMean, Tensor({cout}, 0.0));
      p.add(bn + "/running_var", ParamKind::kRunningVar, Tensor({cout}, 1.0));
    }
    cin = cout;
  }
  return p;
}

Var Discriminator::forward(Var mel, const ParamBinding& p, const ModelParams& params, Mode mode,
                           ModelParams* running) const {
  const Shape& s = mel.shape();
  if (s.size() != 3 || s[1] != cfg_.frames || s[2] != cfg_.n_mels) {
    throw InvalidArgument("discriminator expects [B, " + std::to_string(cfg_.frames) + ", " +
                          std::to_string(cfg_.n_mels) + "], got " + shape_to_string(s));
  }
  const std::size_t batch = s[0];
  // Mel bins become image rows and frames become columns.
  Var h = ag::reshape(ag::swap_last_two(mel), {batch, cfg_.n_mels, cfg_.frames, 1});
  std::size_t i = 0;
  auto block = [&](Var x) {
    const std::size_t mean_idx = i + 4;
    BatchNormStats stats{params.entries()[mean_idx].value, params.entries()[mean_idx + 1].value};
    auto norm = [&](Var v) { return ag::batch_norm(v, p[i + 2], p[i + 3], &stats, mode, cfg_.bn); };
    Var y = cfg_.bn_after_activation ? norm(ag::relu(x)) : ag::relu(norm(x));
    if (mode == Mode::kTrain && running != nullptr) {
      running->entries()[mean_idx].value = std::move(stats.mean);
      running->entries()[mean_idx + 1].value = std::move(stats.var);
    }
    i += 6;
    return y;
  };
  for (std::size_t l = 0; l < kStridedLayers; ++l) {
    h = block(ag::conv2d(h, p[i], p[i + 1], {2, 2}, Padding::kSame));
  }
  h = ag::zero_pad2d(h, kPad);
  h = block(ag::conv2d(h, p[i], p[i + 1], {1, 1}, Padding::kValid));
  h = ag::zero_pad2d(h, kPad);
  h = ag::tanh(ag::conv2d(h, p[i], p[i + 1], {1, 1}, Padding::kValid));
  return ag::reshape(h, {batch, cfg_.output_count()});
}

Tensor Discriminator::predict(const ModelParams& params, const Tensor& mel) const {
  const bool single = mel.rank() == 2;
  Tape tape;
  const auto binding = bind(tape, params, false);
  Tensor in = single ? mel.reshaped(Shape{1, mel.dim(0), mel.dim(1)}) : mel;
  Tensor out = forward(tape.constant(std::move(in)), binding, params, Mode::kInfer).value();
  return single ? std::move(out).reshaped(Shape{out.dim(1)}) : out;
}

}  // namespace ssi::models
