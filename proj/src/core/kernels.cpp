#include "kernels.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "ssi/core/error.hpp"

namespace ssi::kernels {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic>;

// Valid kernel-tap range [lo, hi) along one axis for output position o.
struct TapRange {
  std::size_t lo, hi;
  std::ptrdiff_t first;  // input index of tap 0, may be negative
};

TapRange tap_range(std::size_t o, std::size_t stride, std::size_t pad, std::size_t k, std::size_t n) {
  const std::ptrdiff_t first = static_cast<std::ptrdiff_t>(o * stride) - static_cast<std::ptrdiff_t>(pad);
  const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -first);
  const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(k),
                                                     static_cast<std::ptrdiff_t>(n) - first);
  if (hi <= lo) return {0, 0, first};
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi), first};
}

// Gathers the receptive fields of one output time slice into a
// [out_h * out_w, patch_size] matrix, zero-filling padded taps. Along the
// width axis the taps of one row are contiguous in the input.
void im2col_slice(const ConvGeometry& g, const double* x_batch, std::size_t to, double* cols) {
  const auto [T, H, W] = g.in;
  const auto [kt, kh, kw] = g.kernel;
  const std::size_t cin = g.cin;
  const std::size_t patch = g.patch_size();
  const TapRange rt = tap_range(to, g.stride[0], g.pad_before[0], kt, T);
  std::size_t row = 0;
  for (std::size_t oh = 0; oh < g.out[1]; ++oh) {
    const TapRange rh = tap_range(oh, g.stride[1], g.pad_before[1], kh, H);
    for (std::size_t ow = 0; ow < g.out[2]; ++ow, ++row) {
      const TapRange rw = tap_range(ow, g.stride[2], g.pad_before[2], kw, W);
      double* dst = cols + row * patch;
      for (std::size_t a = 0; a < kt; ++a) {
        for (std::size_t b = 0; b < kh; ++b, dst += kw * cin) {
          if (a < rt.lo || a >= rt.hi || b < rh.lo || b >= rh.hi || rw.hi == 0) {
            std::fill(dst, dst + kw * cin, 0.0);
            continue;
          }
          const std::size_t ti = static_cast<std::size_t>(rt.first + static_cast<std::ptrdiff_t>(a));
          const std::size_t hi = static_cast<std::size_t>(rh.first + static_cast<std::ptrdiff_t>(b));
          const std::size_t wi = static_cast<std::size_t>(rw.first + static_cast<std::ptrdiff_t>(rw.lo));
          const double* src = x_batch + ((ti * H + hi) * W + wi) * cin;
          std::fill(dst, dst + rw.lo * cin, 0.0);
          std::copy(src, src + (rw.hi - rw.lo) * cin, dst + rw.lo * cin);
          std::fill(dst + rw.hi * cin, dst + kw * cin, 0.0);
        }
      }
    }
  }
}

// Inverse of im2col_slice: scatter-adds column gradients back onto the input.
void col2im_slice(const ConvGeometry& g, const double* cols, std::size_t to, double* dx_batch) {
  const auto [T, H, W] = g.in;
  const auto [kt, kh, kw] = g.kernel;
  const std::size_t cin = g.cin;
  const std::size_t patch = g.patch_size();
  const TapRange rt = tap_range(to, g.stride[0], g.pad_before[0], kt, T);
  std::size_t row = 0;
  for (std::size_t oh = 0; oh < g.out[1]; ++oh) {
    const TapRange rh = tap_range(oh, g.stride[1], g.pad_before[1], kh, H);
    for (std::size_t ow = 0; ow < g.out[2]; ++ow, ++row) {
      const TapRange rw = tap_range(ow, g.stride[2], g.pad_before[2], kw, W);
      if (rw.hi == 0) continue;
      for (std::size_t a = rt.lo; a < rt.hi; ++a) {
        for (std::size_t b = rh.lo; b < rh.hi; ++b) {
          const double* src = cols + row * patch + ((a * kh + b) * kw + rw.lo) * cin;
          const std::size_t ti = static_cast<std::size_t>(rt.first + static_cast<std::ptrdiff_t>(a));
          const std::size_t hi = static_cast<std::size_t>(rh.first + static_cast<std::ptrdiff_t>(b));
          const std::size_t wi = static_cast<std::size_t>(rw.first + static_cast<std::ptrdiff_t>(rw.lo));
          double* dst = dx_batch + ((ti * H + hi) * W + wi) * cin;
          const std::size_t n = (rw.hi - rw.lo) * cin;
          for (std::size_t k = 0; k < n; ++k) dst[k] += src[k];
        }
      }
    }
  }
}

std::size_t slice_rows(const ConvGeometry& g) { return g.out[1] * g.out[2]; }
std::size_t in_batch_stride(const ConvGeometry& g) { return g.in[0] * g.in[1] * g.in[2] * g.cin; }
std::size_t out_slice_stride(const ConvGeometry& g) { return slice_rows(g) * g.cout; }

}  // namespace

ConvGeometry make_conv_geometry(const Shape& input, const Shape& kernel,
                                std::array<std::size_t, 3> stride, Padding padding) {
  if (input.size() != 5 || kernel.size() != 5) {
    throw InvalidArgument("conv expects input [B,T,H,W,C] and kernel [kt,kh,kw,Cin,Cout], got " +
                          shape_to_string(input) + " and " + shape_to_string(kernel));
  }
  if (input[4] != kernel[3]) {
    throw InvalidArgument("conv channel mismatch: input has " + std::to_string(input[4]) +
                          " channels, kernel expects " + std::to_string(kernel[3]));
  }
  ConvGeometry g;
  g.batch = input[0];
  g.cin = input[4];
  g.cout = kernel[4];
  for (std::size_t d = 0; d < 3; ++d) {
    if (stride[d] == 0) throw InvalidArgument("conv stride must be positive");
    g.in[d] = input[d + 1];
    g.kernel[d] = kernel[d];
    g.stride[d] = stride[d];
    g.out[d] = conv_output_extent(g.in[d], g.kernel[d], g.stride[d], padding);
    if (padding == Padding::kSame) {
      const std::size_t needed = (g.out[d] - 1) * g.stride[d] + g.kernel[d];
      const std::size_t total = needed > g.in[d] ? needed - g.in[d] : 0;
      g.pad_before[d] = total / 2;
    }
  }
  return g;
}

void conv_forward(const ConvGeometry& g, const double* x, const double* w, const double* bias,
                  double* y) {
  const std::size_t rows = slice_rows(g);
  const std::size_t patch = g.patch_size();
  std::vector<double> cols(rows * patch);
  Eigen::Map<const RowMat> wm(w, static_cast<Eigen::Index>(patch), static_cast<Eigen::Index>(g.cout));
  for (std::size_t b = 0; b < g.batch; ++b) {
    const double* xb = x + b * in_batch_stride(g);
    for (std::size_t to = 0; to < g.out[0]; ++to) {
      im2col_slice(g, xb, to, cols.data());
      Eigen::Map<const RowMat> cm(cols.data(), static_cast<Eigen::Index>(rows),
                                  static_cast<Eigen::Index>(patch));
      double* ys = y + (b * g.out[0] + to) * out_slice_stride(g);
      Eigen::Map<RowMat> ym(ys, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(g.cout));
      ym.noalias() = cm * wm;
      if (bias != nullptr) {
        Eigen::Map<const RowVec> bm(bias, static_cast<Eigen::Index>(g.cout));
        ym.rowwise() += bm;
      }
    }
  }
}

void conv_backward_input(const ConvGeometry& g, const double* dy, const double* w, double* dx) {
  const std::size_t rows = slice_rows(g);
  const std::size_t patch = g.patch_size();
  std::vector<double> cols(rows * patch);
  Eigen::Map<const RowMat> wm(w, static_cast<Eigen::Index>(patch), static_cast<Eigen::Index>(g.cout));
  for (std::size_t b = 0; b < g.batch; ++b) {
    double* dxb = dx + b * in_batch_stride(g);
    for (std::size_t to = 0; to < g.out[0]; ++to) {
      const double* dys = dy + (b * g.out[0] + to) * out_slice_stride(g);
      Eigen::Map<const RowMat> dym(dys, static_cast<Eigen::Index>(rows),
                                   static_cast<Eigen::Index>(g.cout));
      Eigen::Map<RowMat> cm(cols.data(), static_cast<Eigen::Index>(rows),
                            static_cast<Eigen::Index>(patch));
      cm.noalias() = dym * wm.transpose();
      col2im_slice(g, cols.data(), to, dxb);
    }
  }
}

void conv_backward_kernel(const ConvGeometry& g, const double* x, const double* dy, double* dw,
                          double* dbias) {
  const std::size_t rows = slice_rows(g);
  const std::size_t patch = g.patch_size();
  std::vector<double> cols(rows * patch);
  Eigen::Map<RowMat> dwm(dw, static_cast<Eigen::Index>(patch), static_cast<Eigen::Index>(g.cout));
  for (std::size_t b = 0; b < g.batch; ++b) {
    const double* xb = x + b * in_batch_stride(g);
    for (std::size_t to = 0; to < g.out[0]; ++to) {
      im2col_slice(g, xb, to, cols.data());
      Eigen::Map<const RowMat> cm(cols.data(), static_cast<Eigen::Index>(rows),
                                  static_cast<Eigen::Index>(patch));
      const double* dys = dy + (b * g.out[0] + to) * out_slice_stride(g);
      Eigen::Map<const RowMat> dym(dys, static_cast<Eigen::Index>(rows),
                                   static_cast<Eigen::Index>(g.cout));
      dwm.noalias() += cm.transpose() * dym;
      // Plain loop: Eigen's column reduction splits packet and scalar
      // columns by pointer alignment, which changes the summation order.
      if (dbias != nullptr) {
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t c = 0; c < g.cout; ++c) dbias[c] += dys[r * g.cout + c];
        }
      }
    }
  }
}

PoolGeometry make_pool_geometry(const Shape& input, std::size_t ph, std::size_t pw) {
  if (input.size() != 4) throw InvalidArgument("max_pool2d expects [N,H,W,C], got " + shape_to_string(input));
  if (ph == 0 || pw == 0) throw InvalidArgument("pool window must be positive");
  PoolGeometry g{input[0], input[1], input[2], input[3], ph, pw, input[1] / ph, input[2] / pw};
  if (g.oh == 0 || g.ow == 0) {
    throw InvalidArgument("pool window larger than input " + shape_to_string(input));
  }
  return g;
}

void max_pool_forward(const PoolGeometry& g, const double* x, double* y, std::size_t* argmax) {
  for (std::size_t n = 0; n < g.n; ++n) {
    for (std::size_t i = 0; i < g.oh; ++i) {
      for (std::size_t j = 0; j < g.ow; ++j) {
        for (std::size_t c = 0; c < g.c; ++c) {
          double best = -std::numeric_limits<double>::infinity();
          std::size_t best_idx = 0;
          for (std::size_t a = 0; a < g.ph; ++a) {
            for (std::size_t b = 0; b < g.pw; ++b) {
              const std::size_t idx = ((n * g.h + i * g.ph + a) * g.w + j * g.pw + b) * g.c + c;
              if (x[idx] > best) {
                best = x[idx];
                best_idx = idx;
              }
            }
          }
          const std::size_t o = ((n * g.oh + i) * g.ow + j) * g.c + c;
          y[o] = best;
          argmax[o] = best_idx;
        }
      }
    }
  }
}

void batch_norm_forward(const double* x, std::size_t rows, std::size_t channels,
                        const double* gamma, const double* beta, const double* running_mean,
                        const double* running_var, Mode mode, double epsilon, double* y,
                        BatchNormCache& cache, std::vector<double>& batch_mean,
                        std::vector<double>& batch_var) {
  cache.rows = rows;
  cache.channels = channels;
  cache.inv_std.assign(channels, 0.0);
  cache.xhat.assign(rows * channels, 0.0);
  std::vector<double> mean(channels, 0.0);
  std::vector<double> var(channels, 0.0);
  if (mode == Mode::kTrain) {
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < channels; ++c) mean[c] += x[r * channels + c];
    }
    for (auto& m : mean) m /= static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < channels; ++c) {
        const double d = x[r * channels + c] - mean[c];
        var[c] += d * d;
      }
    }
    for (auto& v : var) v /= static_cast<double>(rows);
    batch_mean = mean;
    batch_var = var;
  } else {
    std::copy(running_mean, running_mean + channels, mean.begin());
    std::copy(running_var, running_var + channels, var.begin());
  }
  for (std::size_t c = 0; c < channels; ++c) cache.inv_std[c] = 1.0 / std::sqrt(var[c] + epsilon);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t i = r * channels + c;
      const double xh = (x[i] - mean[c]) * cache.inv_std[c];
      cache.xhat[i] = xh;
      y[i] = gamma[c] * xh + beta[c];
    }
  }
}

void batch_norm_backward(const BatchNormCache& cache, Mode mode, const double* gamma,
                         const double* dy, double* dx, double* dgamma, double* dbeta) {
  const std::size_t rows = cache.rows;
  const std::size_t channels = cache.channels;
  std::vector<double> sum_dy(channels, 0.0);
  std::vector<double> sum_dy_xhat(channels, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t i = r * channels + c;
      sum_dy[c] += dy[i];
      sum_dy_xhat[c] += dy[i] * cache.xhat[i];
    }
  }
  if (dgamma != nullptr) {
    for (std::size_t c = 0; c < channels; ++c) dgamma[c] += sum_dy_xhat[c];
  }
  if (dbeta != nullptr) {
    for (std::size_t c = 0; c < channels; ++c) dbeta[c] += sum_dy[c];
  }
  if (dx == nullptr) return;
  if (mode == Mode::kInfer) {
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < channels; ++c) {
        dx[r * channels + c] += dy[r * channels + c] * gamma[c] * cache.inv_std[c];
      }
    }
    return;
  }
  const double m = static_cast<double>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t i = r * channels + c;
      dx[i] += gamma[c] * cache.inv_std[c] / m *
               (m * dy[i] - sum_dy[c] - cache.xhat[i] * sum_dy_xhat[c]);
    }
  }
}

}  // namespace ssi::kernels
