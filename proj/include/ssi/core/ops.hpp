#pragma once

#include <array>
#include <cstddef>

#include "ssi/core/tensor.hpp"

// Value-level layer operations. Channels are always the last axis. The
// differentiable counterparts recorded on a Tape live in autograd.hpp and share
// the same kernels.

namespace ssi {

enum class Padding { kSame, kValid };
enum class Mode { kTrain, kInfer };

// Same: ceil(in / stride). Valid: floor((in - kernel) / stride) + 1.
std::size_t conv_output_extent(std::size_t in, std::size_t kernel, std::size_t stride, Padding padding);

// input [T,H,W,Cin] or [B,T,H,W,Cin]; kernels [kt,kh,kw,Cin,Cout].
Tensor conv3d(const Tensor& input, const Tensor& kernels, std::array<std::size_t, 3> stride,
              Padding padding);
// input [H,W,Cin] or [B,H,W,Cin]; kernels [kh,kw,Cin,Cout].
Tensor conv2d(const Tensor& input, const Tensor& kernels, std::array<std::size_t, 2> stride,
              Padding padding);

// input [H,W,C] or [B,H,W,C]; zeros added on all four spatial sides.
Tensor zero_pad2d(const Tensor& input, std::size_t pad);

// input [H,W,C] or [B,H,W,C]; non-overlapping windows, trailing rows/cols dropped.
Tensor max_pool2d(const Tensor& input, std::size_t pool_h, std::size_t pool_w);

double sigmoid(double x) noexcept;
Tensor relu(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor swish(const Tensor& x);

// x [N] or [B,N]; weights [N,M]; bias [M].
Tensor dense(const Tensor& x, const Tensor& weights, const Tensor& bias);

struct BatchNormStats {
  Tensor mean;
  Tensor var;
};

struct BatchNormOptions {
  double epsilon = 1e-5;
  double momentum = 0.9;
};

// input [B, ..., C]. Train mode normalises with the statistics of this batch
// (every axis but the last) and folds them into `stats`; infer mode uses
// `stats` unchanged.
Tensor batch_norm(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                  BatchNormStats& stats, Mode mode, const BatchNormOptions& options = {});

}  // namespace ssi
