#include "ssi/core/ops.hpp"

#include <cmath>

#include "kernels.hpp"
#include "ssi/core/error.hpp"

namespace ssi {

std::size_t conv_output_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                               Padding padding) {
  if (in == 0 || kernel == 0 || stride == 0) throw InvalidArgument("conv extents must be positive");
  if (padding == Padding::kSame) return (in + stride - 1) / stride;
  if (kernel > in) {
    throw InvalidArgument("valid conv kernel extent " + std::to_string(kernel) +
                          " exceeds input extent " + std::to_string(in));
  }
  return (in - kernel) / stride + 1;
}

Tensor conv3d(const Tensor& input, const Tensor& kernels, std::array<std::size_t, 3> stride,
              Padding padding) {
  const bool batched = input.rank() == 5;
  if (!batched && input.rank() != 4) {
    throw InvalidArgument("conv3d input must be [T,H,W,C] or [B,T,H,W,C], got " +
                          shape_to_string(input.shape()));
  }
  Shape in5 = input.shape();
  if (!batched) in5.insert(in5.begin(), 1);
  const auto g = kernels::make_conv_geometry(in5, kernels.shape(), stride, padding);
  Shape out{g.batch, g.out[0], g.out[1], g.out[2], g.cout};
  Tensor y(out);
  kernels::conv_forward(g, input.data(), kernels.data(), nullptr, y.data());
  if (!batched) return std::move(y).reshaped({g.out[0], g.out[1], g.out[2], g.cout});
  return y;
}

Tensor conv2d(const Tensor& input, const Tensor& kernels, std::array<std::size_t, 2> stride,
              Padding padding) {
  const bool batched = input.rank() == 4;
  if (!batched && input.rank() != 3) {
    throw InvalidArgument("conv2d input must be [H,W,C] or [B,H,W,C], got " +
                          shape_to_string(input.shape()));
  }
  if (kernels.rank() != 4) {
    throw InvalidArgument("conv2d kernels must be [kh,kw,Cin,Cout], got " +
                          shape_to_string(kernels.shape()));
  }
  const auto& s = input.shape();
  Shape in5 = batched ? Shape{s[0], 1, s[1], s[2], s[3]} : Shape{1, 1, s[0], s[1], s[2]};
  const auto& k = kernels.shape();
  Shape k5{1, k[0], k[1], k[2], k[3]};
  const auto g = kernels::make_conv_geometry(in5, k5, {1, stride[0], stride[1]}, padding);
  Tensor y(Shape{g.batch, g.out[1], g.out[2], g.cout});
  kernels::conv_forward(g, input.data(), kernels.data(), nullptr, y.data());
  if (!batched) return std::move(y).reshaped({g.out[1], g.out[2], g.cout});
  return y;
}

Tensor zero_pad2d(const Tensor& input, std::size_t pad) {
  const bool batched = input.rank() == 4;
  if (!batched && input.rank() != 3) {
    throw InvalidArgument("zero_pad2d input must be [H,W,C] or [B,H,W,C]");
  }
  const auto& s = input.shape();
  const std::size_t n = batched ? s[0] : 1;
  const std::size_t h = s[input.rank() - 3], w = s[input.rank() - 2], c = s[input.rank() - 1];
  const std::size_t ph = h + 2 * pad, pw = w + 2 * pad;
  Tensor out(batched ? Shape{n, ph, pw, c} : Shape{ph, pw, c});
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        const double* src = input.data() + ((b * h + i) * w + j) * c;
        double* dst = out.data() + ((b * ph + i + pad) * pw + j + pad) * c;
        std::copy(src, src + c, dst);
      }
    }
  }
  return out;
}

Tensor max_pool2d(const Tensor& input, std::size_t pool_h, std::size_t pool_w) {
  const bool batched = input.rank() == 4;
  Shape s4 = input.shape();
  if (!batched) s4.insert(s4.begin(), 1);
  const auto g = kernels::make_pool_geometry(s4, pool_h, pool_w);
  Tensor y(Shape{g.n, g.oh, g.ow, g.c});
  std::vector<std::size_t> argmax(y.size());
  kernels::max_pool_forward(g, input.data(), y.data(), argmax.data());
  if (!batched) return std::move(y).reshaped({g.oh, g.ow, g.c});
  return y;
}

double sigmoid(double x) noexcept {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (auto& v : y.values()) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor tanh(const Tensor& x) {
  Tensor y = x;
  for (auto& v : y.values()) v = std::tanh(v);
  return y;
}

Tensor swish(const Tensor& x) {
  Tensor y = x;
  for (auto& v : y.values()) v = v * sigmoid(v);
  return y;
}

Tensor dense(const Tensor& x, const Tensor& weights, const Tensor& bias) {
  if (weights.rank() != 2 || bias.rank() != 1 || bias.dim(0) != weights.dim(1)) {
    throw InvalidArgument("dense expects weights [N,M] and bias [M]");
  }
  const std::size_t n = weights.dim(0), m = weights.dim(1);
  const bool batched = x.rank() == 2;
  if ((!batched && x.rank() != 1) || x.shape().back() != n) {
    throw InvalidArgument("dense input " + shape_to_string(x.shape()) + " does not match weights " +
                          shape_to_string(weights.shape()));
  }
  const std::size_t rows = batched ? x.dim(0) : 1;
  Tensor y(batched ? Shape{rows, m} : Shape{m});
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < m; ++j) y[r * m + j] = bias[j];
    for (std::size_t i = 0; i < n; ++i) {
      const double xi = x[r * n + i];
      const double* wrow = weights.data() + i * m;
      for (std::size_t j = 0; j < m; ++j) y[r * m + j] += xi * wrow[j];
    }
  }
  return y;
}

Tensor batch_norm(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                  BatchNormStats& stats, Mode mode, const BatchNormOptions& options) {
  if (input.rank() < 2) {
    throw InvalidArgument("batch_norm needs a leading batch axis, got " + shape_to_string(input.shape()));
  }
  const std::size_t channels = input.shape().back();
  if (gamma.size() != channels || beta.size() != channels || stats.mean.size() != channels ||
      stats.var.size() != channels) {
    throw InvalidArgument("batch_norm parameters must have " + std::to_string(channels) + " entries");
  }
  Tensor y(input.shape());
  kernels::BatchNormCache cache;
  std::vector<double> bm, bv;
  kernels::batch_norm_forward(input.data(), input.size() / channels, channels, gamma.data(),
                              beta.data(), stats.mean.data(), stats.var.data(), mode,
                              options.epsilon, y.data(), cache, bm, bv);
  if (mode == Mode::kTrain) {
    for (std::size_t c = 0; c < channels; ++c) {
      stats.mean[c] = options.momentum * stats.mean[c] + (1.0 - options.momentum) * bm[c];
      stats.var[c] = options.momentum * stats.var[c] + (1.0 - options.momentum) * bv[c];
    }
  }
  return y;
}

}  // namespace ssi
