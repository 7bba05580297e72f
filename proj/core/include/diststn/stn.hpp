#pragma once

#include <array>
#include <cstddef>

#include "diststn/tape.hpp"
#include "diststn/tensor.hpp"

namespace diststn {

// Row-major 2x3 coordinate map [[t0, t1, t2], [t3, t4, t5]] acting on
// normalized target coordinates (x_t, y_t, 1).
struct AffineParams {
  std::array<double, 6> theta{1.0, 0.0, 0.0, 0.0, 1.0, 0.0};

  static AffineParams identity() { return {}; }
  static AffineParams from_tensor(const Tensor& t);  // t has 6 elements
  Tensor to_tensor() const;
  bool finite() const;

  double operator[](std::size_t i) const { return theta[i]; }
  friend bool operator==(const AffineParams&, const AffineParams&) = default;
};

// Parameters of the map whose grid_sample equals sampling with `first` and
// then with `second`: the homogeneous product first * second.
AffineParams compose_affine(const AffineParams& first, const AffineParams& second);

// Normalized corner-aligned target coordinate of pixel index i on an axis of
// `extent` pixels: -1 at index 0, +1 at index extent-1.
double normalized_coordinate(std::size_t i, std::size_t extent);

// Sampling grid [H x W x 2] of source coordinates (x_s, y_s) in [-1, 1] space.
// `theta` is a 6-element tensor; the grid is differentiable in it.
// Throws DegenerateSize when H < 2 or W < 2.
Tensor affine_grid(Tape& tape, const Tensor& theta, std::size_t height, std::size_t width);
Tensor affine_grid(const AffineParams& theta, std::size_t height, std::size_t width);

// Bilinear sampling with zero padding: input [C x H x W], grid [H x W x 2]
// -> [C x H x W]. Differentiable in both input and grid; at integer sample
// coordinates the coordinate gradient is the left derivative.
Tensor grid_sample(Tape& tape, const Tensor& input, const Tensor& grid);

// Warps `input` by `theta` without recording.
Tensor warp(const Tensor& input, const AffineParams& theta);

}  // namespace diststn
