#pragma once

// Raw-pointer kernels shared by ops.cpp and autograd.cpp. Not installed.

#include <array>
#include <cstddef>
#include <vector>

#include "ssi/core/ops.hpp"

namespace ssi::kernels {

struct ConvGeometry {
  std::size_t batch = 1;
  std::array<std::size_t, 3> in{};
  std::array<std::size_t, 3> out{};
  std::array<std::size_t, 3> kernel{};
  std::array<std::size_t, 3> stride{};
  std::array<std::size_t, 3> pad_before{};
  std::size_t cin = 0;
  std::size_t cout = 0;

  std::size_t patch_size() const { return kernel[0] * kernel[1] * kernel[2] * cin; }
  std::size_t in_size() const { return batch * in[0] * in[1] * in[2] * cin; }
  std::size_t out_size() const { return batch * out[0] * out[1] * out[2] * cout; }
};

// input shape [B,T,H,W,Cin], kernel shape [kt,kh,kw,Cin,Cout].
ConvGeometry make_conv_geometry(const Shape& input, const Shape& kernel,
                                std::array<std::size_t, 3> stride, Padding padding);

// y = conv(x, w) + bias (bias may be null). y is overwritten.
void conv_forward(const ConvGeometry& g, const double* x, const double* w, const double* bias,
                  double* y);
// dx += conv^T(dy, w)
void conv_backward_input(const ConvGeometry& g, const double* dy, const double* w, double* dx);
// dw += x^T dy, dbias += sum dy (dbias may be null)
void conv_backward_kernel(const ConvGeometry& g, const double* x, const double* dy, double* dw,
                          double* dbias);

struct PoolGeometry {
  std::size_t n, h, w, c, ph, pw, oh, ow;
};
PoolGeometry make_pool_geometry(const Shape& input, std::size_t ph, std::size_t pw);
// Writes the pooled output and the flat input index of each selected maximum.
void max_pool_forward(const PoolGeometry& g, const double* x, double* y, std::size_t* argmax);

struct BatchNormCache {
  std::size_t rows = 0;
  std::size_t channels = 0;
  std::vector<double> inv_std;
  std::vector<double> xhat;
};

// Forward pass over a [rows, channels] view. In train mode batch statistics
// are returned through batch_mean/batch_var.
void batch_norm_forward(const double* x, std::size_t rows, std::size_t channels,
                        const double* gamma, const double* beta, const double* running_mean,
                        const double* running_var, Mode mode, double epsilon, double* y,
                        BatchNormCache& cache, std::vector<double>& batch_mean,
                        std::vector<double>& batch_var);
// Accumulates into dx/dgamma/dbeta (any may be null).
void batch_norm_backward(const BatchNormCache& cache, Mode mode, const double* gamma,
                         const double* dy, double* dx, double* dgamma, double* dbeta);

}  // namespace ssi::kernels
