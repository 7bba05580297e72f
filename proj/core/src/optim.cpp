#include "diststn/optim.hpp"

#include "diststn/errors.hpp"

namespace diststn {

void ParamGroup::add(std::string param_name, Tensor value) {
  value.set_requires_grad(true);
  std::vector<double> momentum(value.size(), 0.0);
  params.push_back(Parameter{std::move(param_name), std::move(value), std::move(momentum)});
}

void ParamGroup::zero_grad() {
  for (auto& p : params) p.value.zero_grad();
}

std::size_t ParamGroup::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params) n += p.value.size();
  return n;
}

void sgd_momentum_step(std::span<ParamGroup> groups, const SgdOptions& o) {
  for (const auto& group : groups) {
    for (const auto& p : group.params) {
      if (!p.value.has_grad()) throw MissingGradient("parameter " + group.name + "." + p.name + " has no gradient");
    }
  }
  for (auto& group : groups) {
    const double decay = group.weight_decay_exempt ? 0.0 : o.weight_decay;
    for (auto& p : group.params) {
      auto value = p.value.data();
      auto grad = p.value.mutable_grad();
      auto& v = p.momentum;
      if (v.size() != value.size()) v.assign(value.size(), 0.0);
      for (std::size_t i = 0; i < value.size(); ++i) {
        double g = grad[i];
        if (o.decay_mode == WeightDecayMode::kCoupled) {
          g += decay * value[i];
        } else {
          value[i] *= 1.0 - o.lr * decay;
        }
        v[i] = o.momentum * v[i] + g;
        value[i] -= o.lr * v[i];
        grad[i] = 0.0;
      }
    }
  }
}

}  // namespace diststn
