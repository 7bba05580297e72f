#include "diststn/nn.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "diststn/errors.hpp"

namespace diststn {

namespace {
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatMap = Eigen::Map<const RowMatrix>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
}  // namespace

Tensor dense(Tape& tape, const Tensor& x, const Tensor& weights, const Tensor& bias) {
  if (x.rank() != 1 || weights.rank() != 2 || bias.rank() != 1 || weights.dim(1) != x.dim(0) ||
      weights.dim(0) != bias.dim(0)) {
    throw ShapeMismatch("dense: x " + shape_to_string(x.shape()) + ", weights " +
                        shape_to_string(weights.shape()) + ", bias " + shape_to_string(bias.shape()));
  }
  const std::size_t m = weights.dim(0);
  const std::size_t n = weights.dim(1);
  const auto rows = static_cast<Eigen::Index>(m);
  const auto cols = static_cast<Eigen::Index>(n);
  Tensor out({m});
  VecMap(out.data().data(), rows).noalias() =
      ConstMatMap(weights.data().data(), rows, cols) * ConstVecMap(x.data().data(), cols) +
      ConstVecMap(bias.data().data(), rows);
  if (!tape.wants({&x, &weights, &bias})) return out;
  tape.record("dense", {x, weights, bias}, out, [x, weights, bias, out, rows, cols]() mutable {
    ConstVecMap g(out.grad().data(), rows);
    if (bias.requires_grad()) bias.accumulate_grad(out.grad());
    if (weights.requires_grad()) {
      MatMap(weights.mutable_grad().data(), rows, cols).noalias() += g * ConstVecMap(x.data().data(), cols).transpose();
    }
    if (x.requires_grad()) {
      VecMap(x.mutable_grad().data(), cols).noalias() +=
          ConstMatMap(weights.data().data(), rows, cols).transpose() * g;
    }
  });
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double shift = *std::max_element(p.begin(), p.end());
  double total = 0.0;
  for (double& v : p) {
    v = std::exp(v - shift);
    total += v;
  }
  for (double& v : p) v /= total;
  return p;
}

Tensor softmax_cross_entropy(Tape& tape, const Tensor& logits, std::size_t label) {
  if (logits.rank() != 1 || logits.size() < 2) {
    throw ShapeMismatch("softmax_cross_entropy: logits must be a vector of at least 2 classes, got " +
                        shape_to_string(logits.shape()));
  }
  if (label >= logits.size()) {
    throw LabelOutOfRange("label " + std::to_string(label) + " for " + std::to_string(logits.size()) +
                          " classes");
  }
  auto z = logits.data();
  const double shift = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (double v : z) total += std::exp(v - shift);
  const double log_sum = shift + std::log(total);
  Tensor out = Tensor::scalar(log_sum - z[label]);
  if (!tape.wants({&logits})) return out;
  tape.record("softmax_cross_entropy", {logits}, out, [logits, out, label]() mutable {
    const double g = out.grad()[0];
    std::vector<double> p = softmax(logits.data());
    p[label] -= 1.0;
    for (double& v : p) v *= g;
    logits.accumulate_grad(p);
  });
  return out;
}

Tensor mae_loss(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mae_loss");
  if (a.empty()) throw EmptyTensor("mae_loss of empty tensors");
  auto x = a.data();
  auto y = b.data();
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sum += std::abs(x[i] - y[i]);
  const double n = static_cast<double>(x.size());
  Tensor out = Tensor::scalar(sum / n);
  if (!tape.wants({&a, &b})) return out;
  tape.record("mae_loss", {a, b}, out, [a, b, out, n]() mutable {
    const double g = out.grad()[0] / n;
    auto x = a.data();
    auto y = b.data();
    std::vector<double> d(x.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double diff = x[i] - y[i];
      d[i] = diff > 0.0 ? g : (diff < 0.0 ? -g : 0.0);
    }
    if (a.requires_grad()) a.accumulate_grad(d);
    if (b.requires_grad()) {
      for (double& v : d) v = -v;
      b.accumulate_grad(d);
    }
  });
  return out;
}

}  // namespace diststn
