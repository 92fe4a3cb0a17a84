#include "ssi/core/autograd.hpp"

#include <cmath>

#include "kernels.hpp"
#include "ssi/core/error.hpp"

namespace ssi::ag {

namespace {

void require_same_shape(Var a, Var b, const char* op) {
  if (a.shape() != b.shape()) {
    throw InvalidArgument(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) +
                          " vs " + shape_to_string(b.shape()));
  }
}

Var conv_impl(Var x, Var k, Var bias, const kernels::ConvGeometry& g, Shape out_shape) {
  Tape& tape = x.tape();
  if (bias.valid() && bias.value().size() != g.cout) {
    throw InvalidArgument("conv bias must have " + std::to_string(g.cout) + " entries");
  }
  Tensor y(std::move(out_shape));
  kernels::conv_forward(g, x.value().data(), k.value().data(),
                        bias.valid() ? bias.value().data() : nullptr, y.data());
  return tape.record(std::move(y), {x, k, bias}, [x, k, bias, g](Tape& t, const Tensor& dy) {
    if (t.requires_grad(x)) {
      kernels::conv_backward_input(g, dy.data(), t.value(k).data(), t.grad_slot(x).data());
    }
    const bool need_k = t.requires_grad(k);
    const bool need_b = t.requires_grad(bias);
    if (need_k) {
      kernels::conv_backward_kernel(g, t.value(x).data(), dy.data(), t.grad_slot(k).data(),
                                    need_b ? t.grad_slot(bias).data() : nullptr);
    } else if (need_b) {
      double* db = t.grad_slot(bias).data();
      for (std::size_t i = 0; i < dy.size(); ++i) db[i % g.cout] += dy[i];
    }
  });
}

}  // namespace

Var conv3d(Var x, Var kernels, Var bias, std::array<std::size_t, 3> stride, Padding padding) {
  const auto g = kernels::make_conv_geometry(x.shape(), kernels.shape(), stride, padding);
  return conv_impl(x, kernels, bias, g, Shape{g.batch, g.out[0], g.out[1], g.out[2], g.cout});
}

Var conv2d(Var x, Var kernels, Var bias, std::array<std::size_t, 2> stride, Padding padding) {
  const auto& s = x.shape();
  const auto& k = kernels.shape();
  if (s.size() != 4 || k.size() != 4) {
    throw InvalidArgument("conv2d expects x [B,H,W,C] and kernels [kh,kw,Cin,Cout], got " +
                          shape_to_string(s) + " and " + shape_to_string(k));
  }
  const auto g = kernels::make_conv_geometry(Shape{s[0], 1, s[1], s[2], s[3]},
                                             Shape{1, k[0], k[1], k[2], k[3]},
                                             {1, stride[0], stride[1]}, padding);
  return conv_impl(x, kernels, bias, g, Shape{g.batch, g.out[1], g.out[2], g.cout});
}

Var zero_pad2d(Var x, std::size_t pad) {
  if (x.shape().size() != 4) throw InvalidArgument("zero_pad2d expects [B,H,W,C]");
  Tensor y = ssi::zero_pad2d(x.value(), pad);
  const Shape in = x.shape();
  return x.tape().record(std::move(y), {x}, [x, in, pad](Tape& t, const Tensor& dy) {
    const std::size_t n = in[0], h = in[1], w = in[2], c = in[3];
    const std::size_t pw = w + 2 * pad, ph = h + 2 * pad;
    double* dx = t.grad_slot(x).data();
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t i = 0; i < h; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
          const double* src = dy.data() + ((b * ph + i + pad) * pw + j + pad) * c;
          double* dst = dx + ((b * h + i) * w + j) * c;
          for (std::size_t ch = 0; ch < c; ++ch) dst[ch] += src[ch];
        }
      }
    }
  });
}

Var max_pool2d(Var x, std::size_t pool_h, std::size_t pool_w) {
  const auto g = kernels::make_pool_geometry(x.shape(), pool_h, pool_w);
  Tensor y(Shape{g.n, g.oh, g.ow, g.c});
  std::vector<std::size_t> argmax(y.size());
  kernels::max_pool_forward(g, x.value().data(), y.data(), argmax.data());
  return x.tape().record(std::move(y), {x},
                         [x, argmax = std::move(argmax)](Tape& t, const Tensor& dy) {
                           double* dx = t.grad_slot(x).data();
                           for (std::size_t o = 0; o < argmax.size(); ++o) dx[argmax[o]] += dy[o];
                         });
}

Var dense(Var x, Var weights, Var bias) {
  const auto& xs = x.shape();
  const auto& ws = weights.shape();
  if (xs.size() != 2 || ws.size() != 2 || xs[1] != ws[0] || bias.value().size() != ws[1]) {
    throw InvalidArgument("dense expects x [R,N], weights [N,M], bias [M]; got " +
                          shape_to_string(xs) + ", " + shape_to_string(ws) + ", " +
                          shape_to_string(bias.shape()));
  }
  // A 1x1x1 convolution over R rows is exactly a matrix product plus bias.
  const std::size_t rows = xs[0], n = ws[0], m = ws[1];
  const auto g = kernels::make_conv_geometry(Shape{1, 1, 1, rows, n}, Shape{1, 1, 1, n, m},
                                             {1, 1, 1}, Padding::kValid);
  return conv_impl(x, weights, bias, g, Shape{rows, m});
}

Var batch_norm(Var x, Var gamma, Var beta, BatchNormStats* stats, Mode mode,
               const BatchNormOptions& options) {
  if (x.shape().size() < 2) throw InvalidArgument("batch_norm needs a leading batch axis");
  const std::size_t channels = x.shape().back();
  if (gamma.value().size() != channels || beta.value().size() != channels) {
    throw InvalidArgument("batch_norm gamma/beta must have " + std::to_string(channels) + " entries");
  }
  if (mode == Mode::kInfer && stats == nullptr) {
    throw InvalidArgument("batch_norm infer mode needs running statistics");
  }
  if (stats != nullptr && (stats->mean.size() != channels || stats->var.size() != channels)) {
    throw InvalidArgument("batch_norm running statistics must have " + std::to_string(channels) +
                          " entries");
  }
  Tensor y(x.shape());
  kernels::BatchNormCache cache;
  std::vector<double> bm, bv;
  kernels::batch_norm_forward(x.value().data(), x.value().size() / channels, channels,
                              gamma.value().data(), beta.value().data(),
                              stats ? stats->mean.data() : nullptr,
                              stats ? stats->var.data() : nullptr, mode, options.epsilon,
                              y.data(), cache, bm, bv);
  if (mode == Mode::kTrain && stats != nullptr) {
    for (std::size_t c = 0; c < channels; ++c) {
      stats->mean[c] = options.momentum * stats->mean[c] + (1.0 - options.momentum) * bm[c];
      stats->var[c] = options.momentum * stats->var[c] + (1.0 - options.momentum) * bv[c];
    }
  }
  return x.tape().record(
      std::move(y), {x, gamma, beta},
      [x, gamma, beta, mode, cache = std::move(cache)](Tape& t, const Tensor& dy) {
        kernels::batch_norm_backward(cache, mode, t.value(gamma).data(), dy.data(),
                                     t.requires_grad(x) ? t.grad_slot(x).data() : nullptr,
                                     t.requires_grad(gamma) ? t.grad_slot(gamma).data() : nullptr,
                                     t.requires_grad(beta) ? t.grad_slot(beta).data() : nullptr);
      });
}

Var relu(Var x) {
  return x.tape().record(ssi::relu(x.value()), {x}, [x](Tape& t, const Tensor& dy) {
    const Tensor& xv = t.value(x);
    double* dx = t.grad_slot(x).data();
    for (std::size_t i = 0; i < dy.size(); ++i) {
      if (xv[i] > 0.0) dx[i] += dy[i];
    }
  });
}

Var tanh(Var x) {
  Tensor y = ssi::tanh(x.value());
  Tensor yc = y;
  return x.tape().record(std::move(y), {x}, [x, yc = std::move(yc)](Tape& t, const Tensor& dy) {
    double* dx = t.grad_slot(x).data();
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * (1.0 - yc[i] * yc[i]);
  });
}

Var swish(Var x) {
  return x.tape().record(ssi::swish(x.value()), {x}, [x](Tape& t, const Tensor& dy) {
    const Tensor& xv = t.value(x);
    double* dx = t.grad_slot(x).data();
    const double corrupt = t.fault() == FaultInjection::kSwishBackward ? 1.05 : 1.0;
    for (std::size_t i = 0; i < dy.size(); ++i) {
      const double s = sigmoid(xv[i]);
      dx[i] += dy[i] * corrupt * (s + xv[i] * s * (1.0 - s));
    }
  });
}

Var reshape(Var x, Shape shape) {
  Tensor y = x.value().reshaped(std::move(shape));
  return x.tape().record(std::move(y), {x}, [x](Tape& t, const Tensor& dy) {
    double* dx = t.grad_slot(x).data();
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i];
  });
}

Var swap_last_two(Var x) {
  const Shape& s = x.shape();
  if (s.size() < 2) throw InvalidArgument("swap_last_two needs rank >= 2");
  const std::size_t a = s[s.size() - 2], b = s[s.size() - 1];
  const std::size_t outer = x.value().size() / (a * b);
  Shape out = s;
  std::swap(out[s.size() - 2], out[s.size() - 1]);
  Tensor y(out);
  const double* src = x.value().data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < a; ++i) {
      for (std::size_t j = 0; j < b; ++j) y[o * a * b + j * a + i] = src[o * a * b + i * b + j];
    }
  }
  return x.tape().record(std::move(y), {x}, [x, outer, a, b](Tape& t, const Tensor& dy) {
    double* dx = t.grad_slot(x).data();
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t i = 0; i < a; ++i) {
        for (std::size_t j = 0; j < b; ++j) dx[o * a * b + i * b + j] += dy[o * a * b + j * a + i];
      }
    }
  });
}

Var concat0(Var a, Var b) {
  Shape sa = a.shape(), sb = b.shape();
  if (sa.empty() || sb.empty() || !std::equal(sa.begin() + 1, sa.end(), sb.begin() + 1, sb.end())) {
    throw InvalidArgument("concat0 shape mismatch " + shape_to_string(sa) + " vs " + shape_to_string(sb));
  }
  Shape out = sa;
  out[0] += sb[0];
  std::vector<double> values(a.value().storage());
  values.insert(values.end(), b.value().storage().begin(), b.value().storage().end());
  const std::size_t na = a.value().size();
  return a.tape().record(Tensor(out, std::move(values)), {a, b},
                         [a, b, na](Tape& t, const Tensor& dy) {
                           if (t.requires_grad(a)) {
                             double* da = t.grad_slot(a).data();
                             for (std::size_t i = 0; i < na; ++i) da[i] += dy[i];
                           }
                           if (t.requires_grad(b)) {
                             double* db = t.grad_slot(b).data();
                             for (std::size_t i = na; i < dy.size(); ++i) db[i - na] += dy[i];
                           }
                         });
}

Var slice0(Var x, std::size_t begin, std::size_t end) {
  const Shape& s = x.shape();
  if (s.empty() || begin >= end || end > s[0]) throw InvalidArgument("slice0 range out of bounds");
  const std::size_t inner = x.value().size() / s[0];
  Shape out = s;
  out[0] = end - begin;
  const auto& src = x.value().storage();
  std::vector<double> values(src.begin() + static_cast<std::ptrdiff_t>(begin * inner),
                             src.begin() + static_cast<std::ptrdiff_t>(end * inner));
  const std::size_t off = begin * inner;
  return x.tape().record(Tensor(out, std::move(values)), {x}, [x, off](Tape& t, const Tensor& dy) {
    double* dx = t.grad_slot(x).data() + off;
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i];
  });
}

Var add(Var a, Var b) {
  require_same_shape(a, b, "add");
  return a.tape().record(a.value() + b.value(), {a, b}, [a, b](Tape& t, const Tensor& dy) {
    for (Var v : {a, b}) {
      if (!t.requires_grad(v)) continue;
      double* d = t.grad_slot(v).data();
      for (std::size_t i = 0; i < dy.size(); ++i) d[i] += dy[i];
    }
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a, b, "sub");
  return a.tape().record(a.value() - b.value(), {a, b}, [a, b](Tape& t, const Tensor& dy) {
    if (t.requires_grad(a)) {
      double* d = t.grad_slot(a).data();
      for (std::size_t i = 0; i < dy.size(); ++i) d[i] += dy[i];
    }
    if (t.requires_grad(b)) {
      double* d = t.grad_slot(b).data();
      for (std::size_t i = 0; i < dy.size(); ++i) d[i] -= dy[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a, b, "mul");
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= b.value()[i];
  return a.tape().record(std::move(y), {a, b}, [a, b](Tape& t, const Tensor& dy) {
    if (t.requires_grad(a)) {
      const Tensor& bv = t.value(b);
      double* d = t.grad_slot(a).data();
      for (std::size_t i = 0; i < dy.size(); ++i) d[i] += dy[i] * bv[i];
    }
    if (t.requires_grad(b)) {
      const Tensor& av = t.value(a);
      double* d = t.grad_slot(b).data();
      for (std::size_t i = 0; i < dy.size(); ++i) d[i] += dy[i] * av[i];
    }
  });
}

Var square(Var x) {
  Tensor y = x.value();
  for (auto& v : y.values()) v *= v;
  return x.tape().record(std::move(y), {x}, [x](Tape& t, const Tensor& dy) {
    const Tensor& xv = t.value(x);
    double* d = t.grad_slot(x).data();
    for (std::size_t i = 0; i < dy.size(); ++i) d[i] += 2.0 * xv[i] * dy[i];
  });
}

Var affine(Var x, double a, double b) {
  Tensor y = x.value();
  for (auto& v : y.values()) v = a * v + b;
  return x.tape().record(std::move(y), {x}, [x, a](Tape& t, const Tensor& dy) {
    double* d = t.grad_slot(x).data();
    for (std::size_t i = 0; i < dy.size(); ++i) d[i] += a * dy[i];
  });
}

Var sum(Var x) {
  return x.tape().record(Tensor::scalar(x.value().sum()), {x}, [x](Tape& t, const Tensor& dy) {
    const double g = dy[0];
    for (auto& v : t.grad_slot(x).values()) v += g;
  });
}

Var mean(Var x) {
  const double n = static_cast<double>(x.value().size());
  return x.tape().record(Tensor::scalar(x.value().sum() / n), {x}, [x, n](Tape& t, const Tensor& dy) {
    const double g = dy[0] / n;
    for (auto& v : t.grad_slot(x).values()) v += g;
  });
}

}  // namespace ssi::ag
