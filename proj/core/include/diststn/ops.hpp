#pragma once

#include <cstddef>
#include <utility>

#include "diststn/tape.hpp"
#include "diststn/tensor.hpp"

namespace diststn {

enum class Elementwise { kAdd, kSub, kMul };

Tensor elementwise(Tape& tape, const Tensor& a, const Tensor& b, Elementwise kind);
inline Tensor add(Tape& tape, const Tensor& a, const Tensor& b) { return elementwise(tape, a, b, Elementwise::kAdd); }
inline Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) { return elementwise(tape, a, b, Elementwise::kSub); }
inline Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) { return elementwise(tape, a, b, Elementwise::kMul); }

// x * factor for a constant factor.
Tensor scale(Tape& tape, const Tensor& x, double factor);

// [M x K] . [K x N] -> [M x N]
Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);

struct ConvGeometry {
  std::size_t stride = 1;
  std::size_t pad = 0;
};

// Output extent of a strided convolution; throws NonIntegralOutputSize unless
// (in + 2*pad - kernel) is a non-negative multiple of stride.
std::size_t conv_output_extent(std::size_t in, std::size_t kernel, ConvGeometry geom);
// (in - 1)*stride - 2*pad + kernel; throws NonIntegralOutputSize when not positive.
std::size_t conv_transpose_output_extent(std::size_t in, std::size_t kernel, ConvGeometry geom);

// Cross-correlation with zero padding.
// input [Cin x H x W], kernels [Cout x Cin x kH x kW] -> [Cout x H' x W'].
Tensor conv2d(Tape& tape, const Tensor& input, const Tensor& kernels, ConvGeometry geom);

// Adjoint of conv2d with respect to its input.
// input [Cin x H x W], kernels [Cin x Cout x kH x kW] -> [Cout x H' x W'].
Tensor conv2d_transpose(Tape& tape, const Tensor& input, const Tensor& kernels, ConvGeometry geom);

// x [C x H x W] + bias[c] on every pixel of channel c.
Tensor add_channel_bias(Tape& tape, const Tensor& x, const Tensor& bias);

// max(0, x); the subgradient at 0 is 0.
Tensor relu(Tape& tape, const Tensor& x);

Tensor concat_channels(Tape& tape, const Tensor& a, const Tensor& b);
// Channels [0, at) and [at, C).
std::pair<Tensor, Tensor> split_channels(Tape& tape, const Tensor& x, std::size_t at);

// Same values under a new shape of equal size.
Tensor reshape(Tape& tape, const Tensor& x, Shape shape);

Tensor reduce_mean(Tape& tape, const Tensor& x);

}  // namespace diststn
