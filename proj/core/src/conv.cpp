#include <Eigen/Core>
#include <vector>

#include "diststn/errors.hpp"
#include "diststn/ops.hpp"

namespace diststn {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

// Geometry of one correlation between an image [channels x height x width]
// and its patch matrix [channels*kh*kw x out_h*out_w].
struct PatchLayout {
  std::size_t channels, height, width;
  std::size_t kh, kw;
  std::size_t out_h, out_w;
  ConvGeometry geom;

  std::size_t rows() const { return channels * kh * kw; }
  std::size_t cols() const { return out_h * out_w; }
};

void im2col(std::span<const double> image, const PatchLayout& l, std::span<double> cols) {
  const auto pad = static_cast<std::ptrdiff_t>(l.geom.pad);
  const auto stride = static_cast<std::ptrdiff_t>(l.geom.stride);
  const auto height = static_cast<std::ptrdiff_t>(l.height);
  const auto width = static_cast<std::ptrdiff_t>(l.width);
  std::size_t row = 0;
  for (std::size_t c = 0; c < l.channels; ++c) {
    const double* plane = image.data() + c * l.height * l.width;
    for (std::size_t i = 0; i < l.kh; ++i) {
      for (std::size_t j = 0; j < l.kw; ++j, ++row) {
        double* dst = cols.data() + row * l.cols();
        for (std::size_t oh = 0; oh < l.out_h; ++oh) {
          const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(oh) * stride - pad + static_cast<std::ptrdiff_t>(i);
          double* line = dst + oh * l.out_w;
          if (y < 0 || y >= height) {
            std::fill(line, line + l.out_w, 0.0);
            continue;
          }
          const double* src = plane + y * width;
          for (std::size_t ow = 0; ow < l.out_w; ++ow) {
            const std::ptrdiff_t x = static_cast<std::ptrdiff_t>(ow) * stride - pad + static_cast<std::ptrdiff_t>(j);
            line[ow] = (x < 0 || x >= width) ? 0.0 : src[x];
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatters patch values back onto the image (accumulating).
void col2im(std::span<const double> cols, const PatchLayout& l, std::span<double> image) {
  const auto pad = static_cast<std::ptrdiff_t>(l.geom.pad);
  const auto stride = static_cast<std::ptrdiff_t>(l.geom.stride);
  const auto height = static_cast<std::ptrdiff_t>(l.height);
  const auto width = static_cast<std::ptrdiff_t>(l.width);
  std::size_t row = 0;
  for (std::size_t c = 0; c < l.channels; ++c) {
    double* plane = image.data() + c * l.height * l.width;
    for (std::size_t i = 0; i < l.kh; ++i) {
      for (std::size_t j = 0; j < l.kw; ++j, ++row) {
        const double* src = cols.data() + row * l.cols();
        for (std::size_t oh = 0; oh < l.out_h; ++oh) {
          const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(oh) * stride - pad + static_cast<std::ptrdiff_t>(i);
          if (y < 0 || y >= height) continue;
          double* dst = plane + y * width;
          const double* line = src + oh * l.out_w;
          for (std::size_t ow = 0; ow < l.out_w; ++ow) {
            const std::ptrdiff_t x = static_cast<std::ptrdiff_t>(ow) * stride - pad + static_cast<std::ptrdiff_t>(j);
            if (x >= 0 && x < width) dst[x] += line[ow];
          }
        }
      }
    }
  }
}

void check_kernel_rank(const Tensor& input, const Tensor& kernels, const char* what) {
  if (input.rank() != 3) {
    throw ShapeMismatch(std::string(what) + ": input must be [C x H x W], got " + shape_to_string(input.shape()));
  }
  if (kernels.rank() != 4) {
    throw ShapeMismatch(std::string(what) + ": kernels must be rank 4, got " + shape_to_string(kernels.shape()));
  }
  if (kernels.dim(1) == 0 || kernels.dim(0) == 0) throw ShapeMismatch(std::string(what) + ": empty kernels");
}

Eigen::Index idx(std::size_t v) { return static_cast<Eigen::Index>(v); }

}  // namespace

std::size_t conv_output_extent(std::size_t in, std::size_t kernel, ConvGeometry geom) {
  if (geom.stride == 0) throw InvalidArgument("convolution stride must be positive");
  const auto span = static_cast<std::ptrdiff_t>(in + 2 * geom.pad) - static_cast<std::ptrdiff_t>(kernel);
  if (span < 0 || span % static_cast<std::ptrdiff_t>(geom.stride) != 0) {
    throw NonIntegralOutputSize("convolution of extent " + std::to_string(in) + " with kernel " +
                                std::to_string(kernel) + ", stride " + std::to_string(geom.stride) + ", pad " +
                                std::to_string(geom.pad) + " has no integral output size");
  }
  return static_cast<std::size_t>(span) / geom.stride + 1;
}

std::size_t conv_transpose_output_extent(std::size_t in, std::size_t kernel, ConvGeometry geom) {
  if (geom.stride == 0) throw InvalidArgument("convolution stride must be positive");
  const auto out = static_cast<std::ptrdiff_t>((in - 1) * geom.stride + kernel) -
                   static_cast<std::ptrdiff_t>(2 * geom.pad);
  if (out <= 0) {
    throw NonIntegralOutputSize("transposed convolution of extent " + std::to_string(in) +
                                " yields non-positive output");
  }
  return static_cast<std::size_t>(out);
}

Tensor conv2d(Tape& tape, const Tensor& input, const Tensor& kernels, ConvGeometry geom) {
  check_kernel_rank(input, kernels, "conv2d");
  if (kernels.dim(1) != input.dim(0)) {
    throw ShapeMismatch("conv2d: kernels " + shape_to_string(kernels.shape()) + " for input " +
                        shape_to_string(input.shape()));
  }
  PatchLayout l{input.dim(0), input.dim(1), input.dim(2), kernels.dim(2), kernels.dim(3), 0, 0, geom};
  l.out_h = conv_output_extent(l.height, l.kh, geom);
  l.out_w = conv_output_extent(l.width, l.kw, geom);
  const std::size_t out_channels = kernels.dim(0);

  auto cols = std::make_shared<std::vector<double>>(l.rows() * l.cols());
  im2col(input.data(), l, *cols);
  Tensor out({out_channels, l.out_h, l.out_w});
  MatMap(out.data().data(), idx(out_channels), idx(l.cols())).noalias() =
      ConstMatMap(kernels.data().data(), idx(out_channels), idx(l.rows())) *
      ConstMatMap(cols->data(), idx(l.rows()), idx(l.cols()));

  if (!tape.wants({&input, &kernels})) return out;
  tape.record("conv2d", {input, kernels}, out, [input, kernels, out, l, cols, out_channels]() mutable {
    ConstMatMap g(out.grad().data(), idx(out_channels), idx(l.cols()));
    if (kernels.requires_grad()) {
      RowMatrix dk = g * ConstMatMap(cols->data(), idx(l.rows()), idx(l.cols())).transpose();
      kernels.accumulate_grad(std::span<const double>(dk.data(), static_cast<std::size_t>(dk.size())));
    }
    if (input.requires_grad()) {
      RowMatrix dcols = ConstMatMap(kernels.data().data(), idx(out_channels), idx(l.rows())).transpose() * g;
      col2im(std::span<const double>(dcols.data(), static_cast<std::size_t>(dcols.size())), l,
             input.mutable_grad());
    }
  });
  return out;
}

Tensor conv2d_transpose(Tape& tape, const Tensor& input, const Tensor& kernels, ConvGeometry geom) {
  check_kernel_rank(input, kernels, "conv2d_transpose");
  if (kernels.dim(0) != input.dim(0)) {
    throw ShapeMismatch("conv2d_transpose: kernels " + shape_to_string(kernels.shape()) + " for input " +
                        shape_to_string(input.shape()));
  }
  const std::size_t in_channels = input.dim(0);
  const std::size_t out_channels = kernels.dim(1);
  // Layout of the forward correlation this op is the adjoint of: it maps the
  // output image [out_channels x H' x W'] to the input grid [H x W].
  PatchLayout l{out_channels, 0, 0, kernels.dim(2), kernels.dim(3), input.dim(1), input.dim(2), geom};
  l.height = conv_transpose_output_extent(input.dim(1), l.kh, geom);
  l.width = conv_transpose_output_extent(input.dim(2), l.kw, geom);

  RowMatrix cols = ConstMatMap(kernels.data().data(), idx(in_channels), idx(l.rows())).transpose() *
                   ConstMatMap(input.data().data(), idx(in_channels), idx(l.cols()));
  Tensor out({out_channels, l.height, l.width});
  col2im(std::span<const double>(cols.data(), static_cast<std::size_t>(cols.size())), l, out.data());

  if (!tape.wants({&input, &kernels})) return out;
  tape.record("conv2d_transpose", {input, kernels}, out, [input, kernels, out, l, in_channels]() mutable {
    std::vector<double> gcols(l.rows() * l.cols());
    im2col(out.grad(), l, gcols);
    ConstMatMap gc(gcols.data(), idx(l.rows()), idx(l.cols()));
    if (input.requires_grad()) {
      RowMatrix dx = ConstMatMap(kernels.data().data(), idx(in_channels), idx(l.rows())) * gc;
      input.accumulate_grad(std::span<const double>(dx.data(), static_cast<std::size_t>(dx.size())));
    }
    if (kernels.requires_grad()) {
      RowMatrix dk = ConstMatMap(input.data().data(), idx(in_channels), idx(l.cols())) * gc.transpose();
      kernels.accumulate_grad(std::span<const double>(dk.data(), static_cast<std::size_t>(dk.size())));
    }
  });
  return out;
}

}  // namespace diststn
