#include "diststn/tape.hpp"

#include <algorithm>

#include "diststn/errors.hpp"

namespace diststn {

bool Tape::wants(std::initializer_list<const Tensor*> inputs) const {
  if (!enabled_) return false;
  return std::any_of(inputs.begin(), inputs.end(), [](const Tensor* t) { return t->requires_grad(); });
}

void Tape::record(std::string_view op, std::vector<Tensor> inputs, Tensor output,
                  std::function<void()> backward) {
  output.node_->requires_grad = true;
  output.node_->is_leaf = false;
  nodes_.push_back(Node{op, std::move(inputs), std::move(output), std::move(backward)});
}

bool Tape::contains(const Tensor& t) const {
  return std::any_of(nodes_.begin(), nodes_.end(),
                     [&](const Node& n) { return n.output.same_storage(t); });
}

void backward(const Tensor& loss, Tape& tape) {
  if (loss.size() != 1) throw NotScalar("backward needs a scalar loss, got " + shape_to_string(loss.shape()));
  auto& nodes = tape.nodes();
  auto it = std::find_if(nodes.rbegin(), nodes.rend(),
                         [&](const Tape::Node& n) { return n.output.same_storage(loss); });
  if (it == nodes.rend()) throw NotOnTape("loss was not produced by this tape");
  const std::size_t last = static_cast<std::size_t>(std::distance(it, nodes.rend())) - 1;

  // Intermediate gradients belong to one sweep only.
  for (std::size_t i = 0; i <= last; ++i) {
    Tensor out = nodes[i].output;
    out.zero_grad();
  }
  Tensor seed = loss;
  seed.mutable_grad()[0] = 1.0;

  for (std::size_t i = last + 1; i-- > 0;) nodes[i].backward();
}

}  // namespace diststn
