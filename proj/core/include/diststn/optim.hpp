#pragma once

#include <span>
#include <string>
#include <vector>

#include "diststn/tensor.hpp"

namespace diststn {

struct Parameter {
  std::string name;
  Tensor value;
  std::vector<double> momentum;  // same size as value, starts at zero
};

// Parameters that share an optimizer policy. The pose network is the one
// group exempt from weight decay by default.
struct ParamGroup {
  std::string name;
  bool weight_decay_exempt = false;
  std::vector<Parameter> params;

  void add(std::string param_name, Tensor value);
  void zero_grad();
  std::size_t parameter_count() const;
};

enum class WeightDecayMode {
  kCoupled,    // g' = g + lambda * p, then the momentum update
  kDecoupled,  // p *= (1 - lr * lambda), then the momentum update on g
};

struct SgdOptions {
  double lr = 0.001;
  double momentum = 0.9;
  double weight_decay = 0.004;
  WeightDecayMode decay_mode = WeightDecayMode::kCoupled;
};

// v <- mu*v + g'; p <- p - lr*v; then zeroes gradients.
// Throws MissingGradient for a parameter that never received a gradient buffer.
void sgd_momentum_step(std::span<ParamGroup> groups, const SgdOptions& options);

}  // namespace diststn
