#pragma once

// Differentiable tensor operations. Every op validates shapes (ShapeError),
// checks its output for NaN/Inf (NumericError) and records a backward closure
// when gradient recording is on and an operand requires a gradient.
//
// Layout conventions: signals are [channels, time] or [batch, channels, time];
// dense inputs are [features] or [batch, features].

#include <cstddef>
#include <span>
#include <vector>

#include "hpgan/tensor.hpp"

namespace hpgan::ops {

// Same-padded 1D convolution (zero padding of (K-1)/2 per side, stride 1).
// input [C_in,T] or [B,C_in,T]; kernel [C_out,C_in,K] with odd K; bias [C_out].
Tensor conv1d(const Tensor& input, const Tensor& kernel, const Tensor& bias);

// Max pooling over the last axis with window == stride. Output length is
// ceil(T / window); the trailing window may be partial. Gradient goes to the
// first maximal element of each window.
Tensor maxpool1d(const Tensor& input, std::size_t window = 2);

// Nearest-neighbour upsampling along the last axis.
Tensor upsample1d(const Tensor& input, std::size_t factor = 2);

// weight . input + bias; input [N] or [B,N], weight [M,N], bias [M].
Tensor dense(const Tensor& input, const Tensor& weight, const Tensor& bias);

Tensor elu(const Tensor& x);  // alpha = 1
Tensor sigmoid(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
// Gradient is passed through inside [lo, hi] and zero outside.
Tensor clamp(const Tensor& x, double lo, double hi);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
Tensor add_scalar(const Tensor& x, double offset);

// Full reductions to a scalar.
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor sq_l2_distance(const Tensor& a, const Tensor& b);  // sum (a-b)^2
Tensor l1_distance(const Tensor& a, const Tensor& b);     // sum |a-b|

// Per-row reductions: the leading axis is the batch, the result is [B].
Tensor row_sum(const Tensor& x);
Tensor row_sq_l2_distance(const Tensor& a, const Tensor& b);
Tensor row_l1_distance(const Tensor& a, const Tensor& b);

Tensor reshape(const Tensor& x, Shape shape);

// Contiguous window [start, start+length) of the last axis.
Tensor slice_last(const Tensor& x, std::size_t start, std::size_t length);

// Row b of the result is row b of candidates[choice[b]]. All candidates share
// one shape whose leading axis equals choice.size().
Tensor select_rows(std::span<const Tensor> candidates, std::span<const std::size_t> choice);

}  // namespace hpgan::ops
