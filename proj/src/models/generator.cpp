#include "ssi/models/generator.hpp"

#include <sstream>

#include "ssi/core/autograd.hpp"
#include "ssi/core/error.hpp"
#include "ssi/core/rng.hpp"

namespace ssi::models {

GeneratorConfig GeneratorConfig::miniature() {
  GeneratorConfig c;
  c.height = 8;
  c.width = 16;
  c.convs = {{4, {5, 3, 3}, {5, 2, 2}}, {4, {3, 3, 3}, {1, 2, 2}}};
  c.hidden = 8;
  return c;
}

std::array<std::size_t, 4> GeneratorConfig::conv_output() const {
  std::array<std::size_t, 4> s = {frames, height, width, 1};
  for (const auto& c : convs) {
    for (std::size_t a = 0; a < 3; ++a) s[a] = conv_output_extent(s[a], c.kernel[a], c.stride[a], Padding::kSame);
    s[3] = c.filters;
  }
  return s;
}

std::array<std::size_t, 4> GeneratorConfig::pooled_output() const {
  auto s = conv_output();
  s[1] /= pool[0];
  s[2] /= pool[1];
  return s;
}

std::string GeneratorConfig::descriptor() const {
  std::ostringstream os;
  os << "generator in=" << frames << 'x' << height << 'x' << width << " conv=";
  for (const auto& c : convs) {
    os << c.filters << ':' << c.kernel[0] << 'x' << c.kernel[1] << 'x' << c.kernel[2] << '/' << c.stride[0] << 'x'
       << c.stride[1] << 'x' << c.stride[2] << ',';
  }
  os << " pool=" << pool[0] << 'x' << pool[1] << " hidden=" << hidden << " mels=" << n_mels;
  return os.str();
}

void GeneratorConfig::validate() const {
  if (frames == 0 || height == 0 || width == 0) throw InvalidArgument("generator input extents must be positive");
  if (convs.empty()) throw InvalidArgument("generator needs at least one conv layer");
  for (const auto& c : convs) {
    if (c.filters == 0) throw InvalidArgument("conv filter count must be positive");
    for (std::size_t a = 0; a < 3; ++a) {
      if (c.kernel[a] == 0 || c.stride[a] == 0) throw InvalidArgument("conv kernel and stride must be positive");
    }
  }
  if (pool[0] == 0 || pool[1] == 0) throw InvalidArgument("pool extents must be positive");
  const auto p = pooled_output();
  if (p[1] == 0 || p[2] == 0) throw InvalidArgument("pooling leaves no spatial extent: " + descriptor());
  if (hidden == 0 || n_mels == 0) throw InvalidArgument("dense widths must be positive");
}

Generator::Generator(GeneratorConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

ModelParams Generator::init_params(std::uint64_t seed) const {
  const Rng root(seed);
  auto stream = [&](const std::string& name) { return root.split(name).next_u64(); };
  ModelParams p(cfg_.descriptor());
  std::size_t cin = 1;
  for (std::size_t i = 0; i < cfg_.convs.size(); ++i) {
    const auto& c = cfg_.convs[i];
    const std::string name = "conv" + std::to_string(i + 1);
    const std::size_t fan_in = c.kernel[0] * c.kernel[1] * c.kernel[2] * cin;
    p.add(name + "/kernel", ParamKind::kWeight,
          he_uniform({c.kernel[0], c.kernel[1], c.kernel[2], cin, c.filters}, fan_in, stream(name)));
    p.add(name + "/bias", ParamKind::kBias, Tensor({c.filters}));
    cin = c.filters;
  }
  const auto pooled = cfg_.pooled_output();
  const std::size_t flat = pooled[1] * pooled[2] * pooled[3];
  p.add("dense1/weights", ParamKind::kWeight, he_uniform({flat, cfg_.hidden}, flat, stream("dense1")));
  p.add("dense1/bias", ParamKind::kBias, Tensor({cfg_.hidden}));
  p.add("dense2/weights", ParamKind::kWeight, he_uniform({cfg_.hidden, cfg_.n_mels}, cfg_.hidden, stream("dense2")));
  p.add("dense2/bias", ParamKind::kBias, Tensor({cfg_.n_mels}));
  return p;
}

Var Generator::forward(Var x, const ParamBinding& p) const {
  const Shape& s = x.shape();
  if (s.size() != 4 || s[1] != cfg_.frames || s[2] != cfg_.height || s[3] != cfg_.width) {
    throw InvalidArgument("generator expects [B, " + std::to_string(cfg_.frames) + ", " + std::to_string(cfg_.height) +
                          ", " + std::to_string(cfg_.width) + "], got " + shape_to_string(s));
  }
  const std::size_t batch = s[0];
  Var h = ag::reshape(x, {batch, cfg_.frames, cfg_.height, cfg_.width, 1});
  std::size_t i = 0;
  for (const auto& c : cfg_.convs) {
    h = ag::swish(ag::conv3d(h, p[i], p[i + 1], c.stride, Padding::kSame));
    i += 2;
  }
  const auto co = cfg_.conv_output();
  const auto po = cfg_.pooled_output();
  h = ag::reshape(h, {batch * co[0], co[1], co[2], co[3]});
  h = ag::max_pool2d(h, cfg_.pool[0], cfg_.pool[1]);
  h = ag::reshape(h, {batch * po[0], po[1] * po[2] * po[3]});
  h = ag::swish(ag::dense(h, p[i], p[i + 1]));
  h = ag::dense(h, p[i + 2], p[i + 3]);
  return ag::reshape(h, {batch, co[0], cfg_.n_mels});
}

Tensor Generator::predict(const ModelParams& params, const Tensor& x) const {
  const bool single = x.rank() == 3;
  Tape tape;
  const auto binding = bind(tape, params, false);
  Tensor in = single ? x.reshaped(Shape{1, x.dim(0), x.dim(1), x.dim(2)}) : x;
  Tensor out = forward(tape.constant(std::move(in)), binding).value();
  return single ? std::move(out).reshaped(Shape{out.dim(1), out.dim(2)}) : out;
}

}  // namespace ssi::models
