#pragma once

#include <array>
#include <cstddef>

#include "ssi/core/ops.hpp"
#include "ssi/core/tape.hpp"

// Differentiable ops recorded on a Tape. Layer ops take batched inputs.

namespace ssi::ag {

// x [B,T,H,W,Cin], kernels [kt,kh,kw,Cin,Cout], bias [Cout] or unbound.
Var conv3d(Var x, Var kernels, Var bias, std::array<std::size_t, 3> stride, Padding padding);
// x [B,H,W,Cin], kernels [kh,kw,Cin,Cout], bias [Cout] or unbound.
Var conv2d(Var x, Var kernels, Var bias, std::array<std::size_t, 2> stride, Padding padding);
// x [B,H,W,C]
Var zero_pad2d(Var x, std::size_t pad);
// x [N,H,W,C]
Var max_pool2d(Var x, std::size_t pool_h, std::size_t pool_w);
// x [R,N], weights [N,M], bias [M]
Var dense(Var x, Var weights, Var bias);

// When `stats` is non-null and mode is train, running statistics are
// updated in place as a side effect of the forward pass.
Var batch_norm(Var x, Var gamma, Var beta, BatchNormStats* stats, Mode mode,
               const BatchNormOptions& options = {});

Var relu(Var x);
Var tanh(Var x);
Var swish(Var x);

Var reshape(Var x, Shape shape);
// [..., A, B] -> [..., B, A]
Var swap_last_two(Var x);
Var concat0(Var a, Var b);
Var slice0(Var x, std::size_t begin, std::size_t end);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var square(Var x);
// a * x + b elementwise
Var affine(Var x, double a, double b);
Var sum(Var x);
Var mean(Var x);

}  // namespace ssi::ag
