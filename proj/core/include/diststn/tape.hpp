#pragma once

#include <functional>
#include <string_view>
#include <vector>

#include "diststn/tensor.hpp"

namespace diststn {

// Ordered record of differentiable operations for reverse-mode sweeps.
//
// Ops record a node only when the tape is enabled and at least one input
// requires a gradient; the output then requires a gradient too. A disabled
// tape turns every op into a plain forward computation.
class Tape {
 public:
  struct Node {
    std::string_view op;
    std::vector<Tensor> inputs;
    Tensor output;
    // Reads output.grad() and accumulates into the inputs that require grad.
    std::function<void()> backward;
  };

  Tape() = default;
  explicit Tape(bool enabled) : enabled_(enabled) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  bool enabled() const { return enabled_; }

  // True when an op over `inputs` must be recorded.
  bool wants(std::initializer_list<const Tensor*> inputs) const;

  // Marks `output` as a tape-produced tensor requiring grad and appends the node.
  void record(std::string_view op, std::vector<Tensor> inputs, Tensor output,
              std::function<void()> backward);

  bool contains(const Tensor& t) const;
  std::size_t size() const { return nodes_.size(); }
  const std::vector<Node>& nodes() const { return nodes_; }
  void clear() { nodes_.clear(); }

 private:
  bool enabled_ = true;
  std::vector<Node> nodes_;
};

// Populates d(loss)/d(leaf) on every requires_grad leaf reachable from `loss`.
// Leaf gradients accumulate across calls; intermediate gradients are reset.
void backward(const Tensor& loss, Tape& tape);

}  // namespace diststn
