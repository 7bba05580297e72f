#include "diststn/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "diststn/errors.hpp"

namespace diststn {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor::Tensor() : node_(std::make_shared<detail::TensorNode>()) {}

Tensor::Tensor(Shape shape, double fill) : node_(std::make_shared<detail::TensorNode>()) {
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeMismatch("tensor dimensions must be positive, got " + shape_to_string(shape));
  }
  node_->data.assign(shape_size(shape), fill);
  node_->shape = std::move(shape);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : node_(std::make_shared<detail::TensorNode>()) {
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeMismatch("tensor dimensions must be positive, got " + shape_to_string(shape));
  }
  if (shape_size(shape) != data.size()) {
    throw ShapeMismatch("shape " + shape_to_string(shape) + " does not match " +
                        std::to_string(data.size()) + " values");
  }
  node_->shape = std::move(shape);
  node_->data = std::move(data);
}

Tensor Tensor::scalar(double value) { return Tensor({1}, std::vector<double>{value}); }

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

double Tensor::item() const {
  if (size() != 1) throw NotScalar("item() on tensor of shape " + shape_to_string(shape()));
  return node_->data[0];
}

Tensor& Tensor::set_requires_grad(bool on) {
  node_->requires_grad = on;
  return *this;
}

std::span<double> Tensor::mutable_grad() const {
  if (node_->grad.empty()) node_->grad.assign(node_->data.size(), 0.0);
  return node_->grad;
}

void Tensor::zero_grad() const {
  if (node_->grad.empty()) {
    node_->grad.assign(node_->data.size(), 0.0);
  } else {
    std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
  }
}

void Tensor::accumulate_grad(std::span<const double> g) const {
  auto dst = mutable_grad();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g[i];
}

Tensor Tensor::clone() const {
  auto node = std::make_shared<detail::TensorNode>(*node_);
  return Tensor(std::move(node));
}

Tensor Tensor::detach() const { return Tensor(node_->shape, node_->data); }

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeMismatch(std::string(what) + ": " + shape_to_string(a.shape()) + " vs " +
                        shape_to_string(b.shape()));
  }
}

}  // namespace diststn
