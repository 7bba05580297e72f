#include "diststn/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <vector>

#include "diststn/errors.hpp"

namespace diststn {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

void require_chw(const Tensor& t, const char* what) {
  if (t.rank() != 3) {
    throw ShapeMismatch(std::string(what) + ": expected [C x H x W], got " + shape_to_string(t.shape()));
  }
}

}  // namespace

Tensor elementwise(Tape& tape, const Tensor& a, const Tensor& b, Elementwise kind) {
  require_same_shape(a, b, "elementwise");
  Tensor out(a.shape());
  auto x = a.data();
  auto y = b.data();
  auto o = out.data();
  switch (kind) {
    case Elementwise::kAdd:
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] + y[i];
      break;
    case Elementwise::kSub:
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] - y[i];
      break;
    case Elementwise::kMul:
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] * y[i];
      break;
  }
  if (!tape.wants({&a, &b})) return out;

  static constexpr const char* kNames[] = {"add", "sub", "mul"};
  tape.record(kNames[static_cast<int>(kind)], {a, b}, out, [a, b, out, kind]() mutable {
    auto g = out.grad();
    std::vector<double> buf(g.size());
    if (a.requires_grad()) {
      if (kind == Elementwise::kMul) {
        auto y = b.data();
        for (std::size_t i = 0; i < g.size(); ++i) buf[i] = g[i] * y[i];
        a.accumulate_grad(buf);
      } else {
        a.accumulate_grad(g);
      }
    }
    if (b.requires_grad()) {
      if (kind == Elementwise::kMul) {
        auto x = a.data();
        for (std::size_t i = 0; i < g.size(); ++i) buf[i] = g[i] * x[i];
      } else if (kind == Elementwise::kSub) {
        for (std::size_t i = 0; i < g.size(); ++i) buf[i] = -g[i];
      } else {
        std::copy(g.begin(), g.end(), buf.begin());
      }
      b.accumulate_grad(buf);
    }
  });
  return out;
}

Tensor scale(Tape& tape, const Tensor& x, double factor) {
  Tensor out(x.shape());
  auto in = x.data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = in[i] * factor;
  if (!tape.wants({&x})) return out;
  tape.record("scale", {x}, out, [x, out, factor]() mutable {
    auto g = out.grad();
    std::vector<double> buf(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) buf[i] = g[i] * factor;
    x.accumulate_grad(buf);
  });
  return out;
}

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeMismatch("matmul: " + shape_to_string(a.shape()) + " . " + shape_to_string(b.shape()));
  }
  const auto m = static_cast<Eigen::Index>(a.dim(0));
  const auto k = static_cast<Eigen::Index>(a.dim(1));
  const auto n = static_cast<Eigen::Index>(b.dim(1));
  Tensor out({a.dim(0), b.dim(1)});
  MatMap(out.data().data(), m, n).noalias() =
      ConstMatMap(a.data().data(), m, k) * ConstMatMap(b.data().data(), k, n);
  if (!tape.wants({&a, &b})) return out;
  tape.record("matmul", {a, b}, out, [a, b, out, m, k, n]() mutable {
    ConstMatMap g(out.grad().data(), m, n);
    if (a.requires_grad()) {
      RowMatrix da = g * ConstMatMap(b.data().data(), k, n).transpose();
      a.accumulate_grad(std::span<const double>(da.data(), static_cast<std::size_t>(da.size())));
    }
    if (b.requires_grad()) {
      RowMatrix db = ConstMatMap(a.data().data(), m, k).transpose() * g;
      b.accumulate_grad(std::span<const double>(db.data(), static_cast<std::size_t>(db.size())));
    }
  });
  return out;
}

Tensor add_channel_bias(Tape& tape, const Tensor& x, const Tensor& bias) {
  require_chw(x, "add_channel_bias");
  if (bias.rank() != 1 || bias.dim(0) != x.dim(0)) {
    throw ShapeMismatch("add_channel_bias: bias " + shape_to_string(bias.shape()) + " for input " +
                        shape_to_string(x.shape()));
  }
  const std::size_t channels = x.dim(0);
  const std::size_t plane = x.dim(1) * x.dim(2);
  Tensor out(x.shape());
  auto in = x.data();
  auto o = out.data();
  for (std::size_t c = 0; c < channels; ++c) {
    const double b = bias[c];
    for (std::size_t i = c * plane; i < (c + 1) * plane; ++i) o[i] = in[i] + b;
  }
  if (!tape.wants({&x, &bias})) return out;
  tape.record("add_channel_bias", {x, bias}, out, [x, bias, out, channels, plane]() mutable {
    auto g = out.grad();
    if (x.requires_grad()) x.accumulate_grad(g);
    if (bias.requires_grad()) {
      std::vector<double> db(channels, 0.0);
      for (std::size_t c = 0; c < channels; ++c) {
        double s = 0.0;
        for (std::size_t i = c * plane; i < (c + 1) * plane; ++i) s += g[i];
        db[c] = s;
      }
      bias.accumulate_grad(db);
    }
  });
  return out;
}

Tensor relu(Tape& tape, const Tensor& x) {
  Tensor out(x.shape());
  auto in = x.data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = in[i] > 0.0 ? in[i] : 0.0;
  if (!tape.wants({&x})) return out;
  tape.record("relu", {x}, out, [x, out]() mutable {
    auto g = out.grad();
    auto in = x.data();
    std::vector<double> buf(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) buf[i] = in[i] > 0.0 ? g[i] : 0.0;
    x.accumulate_grad(buf);
  });
  return out;
}

Tensor concat_channels(Tape& tape, const Tensor& a, const Tensor& b) {
  require_chw(a, "concat_channels");
  require_chw(b, "concat_channels");
  if (a.dim(1) != b.dim(1) || a.dim(2) != b.dim(2)) {
    throw ShapeMismatch("concat_channels: spatial dims differ, " + shape_to_string(a.shape()) + " vs " +
                        shape_to_string(b.shape()));
  }
  Tensor out({a.dim(0) + b.dim(0), a.dim(1), a.dim(2)});
  auto o = out.data();
  std::copy(a.data().begin(), a.data().end(), o.begin());
  std::copy(b.data().begin(), b.data().end(), o.begin() + static_cast<std::ptrdiff_t>(a.size()));
  if (!tape.wants({&a, &b})) return out;
  tape.record("concat_channels", {a, b}, out, [a, b, out]() mutable {
    auto g = out.grad();
    if (a.requires_grad()) a.accumulate_grad(g.subspan(0, a.size()));
    if (b.requires_grad()) b.accumulate_grad(g.subspan(a.size(), b.size()));
  });
  return out;
}

std::pair<Tensor, Tensor> split_channels(Tape& tape, const Tensor& x, std::size_t at) {
  require_chw(x, "split_channels");
  if (at == 0 || at >= x.dim(0)) {
    throw ShapeMismatch("split_channels: split point " + std::to_string(at) + " outside (0, " +
                        std::to_string(x.dim(0)) + ")");
  }
  const std::size_t plane = x.dim(1) * x.dim(2);
  const std::size_t head_size = at * plane;
  Tensor head({at, x.dim(1), x.dim(2)});
  Tensor tail({x.dim(0) - at, x.dim(1), x.dim(2)});
  auto in = x.data();
  std::copy(in.begin(), in.begin() + static_cast<std::ptrdiff_t>(head_size), head.data().begin());
  std::copy(in.begin() + static_cast<std::ptrdiff_t>(head_size), in.end(), tail.data().begin());
  if (!tape.wants({&x})) return {head, tail};
  // One node per output so each half's gradient routes independently.
  tape.record("split_channels.head", {x}, head, [x, head]() mutable {
    auto g = x.mutable_grad();
    auto gh = head.grad();
    for (std::size_t i = 0; i < gh.size(); ++i) g[i] += gh[i];
  });
  tape.record("split_channels.tail", {x}, tail, [x, tail, head_size]() mutable {
    auto g = x.mutable_grad();
    auto gt = tail.grad();
    for (std::size_t i = 0; i < gt.size(); ++i) g[head_size + i] += gt[i];
  });
  return {head, tail};
}

Tensor reshape(Tape& tape, const Tensor& x, Shape shape) {
  if (shape_size(shape) != x.size()) {
    throw ShapeMismatch("reshape: " + shape_to_string(x.shape()) + " -> " + shape_to_string(shape));
  }
  Tensor out(std::move(shape), std::vector<double>(x.data().begin(), x.data().end()));
  if (!tape.wants({&x})) return out;
  tape.record("reshape", {x}, out, [x, out]() mutable { x.accumulate_grad(out.grad()); });
  return out;
}

Tensor reduce_mean(Tape& tape, const Tensor& x) {
  if (x.empty()) throw EmptyTensor("reduce_mean of an empty tensor");
  double sum = 0.0;
  for (double v : x.data()) sum += v;
  const double n = static_cast<double>(x.size());
  Tensor out = Tensor::scalar(sum / n);
  if (!tape.wants({&x})) return out;
  tape.record("reduce_mean", {x}, out, [x, out, n]() mutable {
    const double g = out.grad()[0] / n;
    auto dst = x.mutable_grad();
    for (double& v : dst) v += g;
  });
  return out;
}

}  // namespace diststn
