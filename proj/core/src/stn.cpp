#include "diststn/stn.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "diststn/errors.hpp"

namespace diststn {

namespace {

// Pixel-space sampling position along one axis with its two taps.
struct Taps {
  std::ptrdiff_t lo = 0;  // the second tap is lo + 1
  double frac = 0.0;      // weight of the second tap, in (0, 1]
  bool outside = true;    // both taps out of range
};

Taps locate(double normalized, std::size_t extent) {
  double u = (normalized + 1.0) * static_cast<double>(extent - 1) / 2.0;
  Taps t;
  if (!(u > -1.0 && u <= static_cast<double>(extent))) return t;
  // Round-off from normalizing and unnormalizing must not turn a pixel-centre
  // sample into a two-tap blend.
  const double nearest = std::nearbyint(u);
  if (std::abs(u - nearest) <= 16.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(extent)) {
    u = nearest;
  }
  const double lo = std::ceil(u) - 1.0;
  t.lo = static_cast<std::ptrdiff_t>(lo);
  t.frac = u - lo;
  t.outside = false;
  return t;
}

void require_grid(const Tensor& input, const Tensor& grid) {
  if (input.rank() != 3) {
    throw ShapeMismatch("grid_sample: input must be [C x H x W], got " + shape_to_string(input.shape()));
  }
  if (grid.rank() != 3 || grid.dim(0) != input.dim(1) || grid.dim(1) != input.dim(2) || grid.dim(2) != 2) {
    throw ShapeMismatch("grid_sample: grid " + shape_to_string(grid.shape()) + " does not match input " +
                        shape_to_string(input.shape()));
  }
  if (input.dim(1) < 2 || input.dim(2) < 2) {
    throw DegenerateSize("grid_sample needs H, W >= 2, got " + shape_to_string(input.shape()));
  }
}

}  // namespace

AffineParams AffineParams::from_tensor(const Tensor& t) {
  if (t.size() != 6) throw ShapeMismatch("affine parameters need 6 values, got " + shape_to_string(t.shape()));
  AffineParams p;
  for (std::size_t i = 0; i < 6; ++i) p.theta[i] = t[i];
  return p;
}

Tensor AffineParams::to_tensor() const { return Tensor({6}, std::vector<double>(theta.begin(), theta.end())); }

bool AffineParams::finite() const {
  for (double v : theta) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

AffineParams compose_affine(const AffineParams& a, const AffineParams& b) {
  // [A | s] * [B | t] = [AB | At + s] in homogeneous form.
  AffineParams out;
  for (int r = 0; r < 2; ++r) {
    const double a0 = a.theta[3 * r], a1 = a.theta[3 * r + 1], a2 = a.theta[3 * r + 2];
    out.theta[3 * r + 0] = a0 * b.theta[0] + a1 * b.theta[3];
    out.theta[3 * r + 1] = a0 * b.theta[1] + a1 * b.theta[4];
    out.theta[3 * r + 2] = a0 * b.theta[2] + a1 * b.theta[5] + a2;
  }
  return out;
}

double normalized_coordinate(std::size_t i, std::size_t extent) {
  return 2.0 * static_cast<double>(i) / static_cast<double>(extent - 1) - 1.0;
}

Tensor affine_grid(Tape& tape, const Tensor& theta, std::size_t height, std::size_t width) {
  if (theta.size() != 6) throw ShapeMismatch("affine_grid: theta must have 6 values, got " + shape_to_string(theta.shape()));
  if (height < 2 || width < 2) {
    throw DegenerateSize("affine_grid needs H, W >= 2, got " + std::to_string(height) + "x" + std::to_string(width));
  }
  Tensor grid({height, width, 2});
  auto g = grid.data();
  auto t = theta.data();
  for (std::size_t h = 0; h < height; ++h) {
    const double yt = normalized_coordinate(h, height);
    for (std::size_t w = 0; w < width; ++w) {
      const double xt = normalized_coordinate(w, width);
      double* cell = g.data() + 2 * (h * width + w);
      cell[0] = t[0] * xt + t[1] * yt + t[2];
      cell[1] = t[3] * xt + t[4] * yt + t[5];
    }
  }
  if (!tape.wants({&theta})) return grid;
  tape.record("affine_grid", {theta}, grid, [theta, grid, height, width]() mutable {
    auto gg = grid.grad();
    std::vector<double> dt(6, 0.0);
    for (std::size_t h = 0; h < height; ++h) {
      const double yt = normalized_coordinate(h, height);
      for (std::size_t w = 0; w < width; ++w) {
        const double xt = normalized_coordinate(w, width);
        const double gx = gg[2 * (h * width + w)];
        const double gy = gg[2 * (h * width + w) + 1];
        dt[0] += gx * xt;
        dt[1] += gx * yt;
        dt[2] += gx;
        dt[3] += gy * xt;
        dt[4] += gy * yt;
        dt[5] += gy;
      }
    }
    theta.accumulate_grad(dt);
  });
  return grid;
}

Tensor affine_grid(const AffineParams& theta, std::size_t height, std::size_t width) {
  Tape off(false);
  return affine_grid(off, theta.to_tensor(), height, width);
}

Tensor grid_sample(Tape& tape, const Tensor& input, const Tensor& grid) {
  require_grid(input, grid);
  const std::size_t channels = input.dim(0);
  const std::size_t height = input.dim(1);
  const std::size_t width = input.dim(2);
  const std::size_t plane = height * width;
  const auto ih = static_cast<std::ptrdiff_t>(height);
  const auto iw = static_cast<std::ptrdiff_t>(width);

  struct Sample {
    Taps x, y;
  };
  auto samples = std::make_shared<std::vector<Sample>>(plane);
  auto gd = grid.data();
  for (std::size_t p = 0; p < plane; ++p) {
    (*samples)[p] = Sample{locate(gd[2 * p], width), locate(gd[2 * p + 1], height)};
  }

  Tensor out(input.shape());
  auto in = input.data();
  auto o = out.data();
  for (std::size_t p = 0; p < plane; ++p) {
    const Sample& s = (*samples)[p];
    if (s.x.outside || s.y.outside) continue;
    const std::ptrdiff_t x0 = s.x.lo, x1 = s.x.lo + 1, y0 = s.y.lo, y1 = s.y.lo + 1;
    const bool vx0 = x0 >= 0, vx1 = x1 < iw, vy0 = y0 >= 0, vy1 = y1 < ih;
    const double fx = s.x.frac, fy = s.y.frac;
    const double w00 = (1.0 - fx) * (1.0 - fy), w01 = fx * (1.0 - fy);
    const double w10 = (1.0 - fx) * fy, w11 = fx * fy;
    for (std::size_t c = 0; c < channels; ++c) {
      const double* u = in.data() + c * plane;
      double v = 0.0;
      if (vy0 && vx0) v += w00 * u[y0 * iw + x0];
      if (vy0 && vx1) v += w01 * u[y0 * iw + x1];
      if (vy1 && vx0) v += w10 * u[y1 * iw + x0];
      if (vy1 && vx1) v += w11 * u[y1 * iw + x1];
      o[c * plane + p] = v;
    }
  }

  if (!tape.wants({&input, &grid})) return out;
  tape.record("grid_sample", {input, grid}, out,
              [input, grid, out, samples, channels, height, width, plane, ih, iw]() mutable {
                auto g = out.grad();
                auto in = input.data();
                const bool want_input = input.requires_grad();
                const bool want_grid = grid.requires_grad();
                std::span<double> din = want_input ? input.mutable_grad() : std::span<double>{};
                std::span<double> dgrid = want_grid ? grid.mutable_grad() : std::span<double>{};
                const double sx = static_cast<double>(width - 1) / 2.0;
                const double sy = static_cast<double>(height - 1) / 2.0;
                for (std::size_t p = 0; p < plane; ++p) {
                  const Sample& s = (*samples)[p];
                  if (s.x.outside || s.y.outside) continue;
                  const std::ptrdiff_t x0 = s.x.lo, x1 = s.x.lo + 1, y0 = s.y.lo, y1 = s.y.lo + 1;
                  const bool vx0 = x0 >= 0, vx1 = x1 < iw, vy0 = y0 >= 0, vy1 = y1 < ih;
                  const double fx = s.x.frac, fy = s.y.frac;
                  double du = 0.0, dv = 0.0;
                  for (std::size_t c = 0; c < channels; ++c) {
                    const double gc = g[c * plane + p];
                    if (gc == 0.0) continue;
                    const double* u = in.data() + c * plane;
                    const double u00 = (vy0 && vx0) ? u[y0 * iw + x0] : 0.0;
                    const double u01 = (vy0 && vx1) ? u[y0 * iw + x1] : 0.0;
                    const double u10 = (vy1 && vx0) ? u[y1 * iw + x0] : 0.0;
                    const double u11 = (vy1 && vx1) ? u[y1 * iw + x1] : 0.0;
                    if (want_grid) {
                      du += gc * ((1.0 - fy) * (u01 - u00) + fy * (u11 - u10));
                      dv += gc * ((1.0 - fx) * (u10 - u00) + fx * (u11 - u01));
                    }
                    if (want_input) {
                      double* d = din.data() + c * plane;
                      if (vy0 && vx0) d[y0 * iw + x0] += gc * (1.0 - fx) * (1.0 - fy);
                      if (vy0 && vx1) d[y0 * iw + x1] += gc * fx * (1.0 - fy);
                      if (vy1 && vx0) d[y1 * iw + x0] += gc * (1.0 - fx) * fy;
                      if (vy1 && vx1) d[y1 * iw + x1] += gc * fx * fy;
                    }
                  }
                  if (want_grid) {
                    dgrid[2 * p] += du * sx;
                    dgrid[2 * p + 1] += dv * sy;
                  }
                }
              });
  return out;
}

Tensor warp(const Tensor& input, const AffineParams& theta) {
  Tape off(false);
  return grid_sample(off, input, affine_grid(theta, input.dim(1), input.dim(2)));
}

}  // namespace diststn
