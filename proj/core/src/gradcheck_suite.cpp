#include "diststn/gradcheck_suite.hpp"

#include <cmath>
#include <random>

#include "diststn/errors.hpp"
#include "diststn/model.hpp"
#include "diststn/nn.hpp"
#include "diststn/ops.hpp"
#include "diststn/stn.hpp"

namespace diststn {

namespace {

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}

  Tensor uniform(Shape shape, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> d(lo, hi);
    Tensor t(std::move(shape));
    for (double& v : t.data()) v = d(rng_);
    return t;
  }
  // Uniform values with magnitude at least `gap`.
  Tensor away_from_zero(Shape shape, double gap = 0.05) {
    Tensor t = uniform(std::move(shape));
    for (double& v : t.data()) {
      if (std::abs(v) < gap) v += v < 0.0 ? -gap : gap;
    }
    return t;
  }
  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

// Projects a tensor onto a fixed random direction to get a scalar.
ScalarFunction projected(std::function<Tensor(Tape&, const std::vector<Tensor>&)> f, Tensor direction) {
  return [f = std::move(f), direction](Tape& tape, const std::vector<Tensor>& in) {
    return reduce_mean(tape, mul(tape, f(tape, in), direction));
  };
}

Tensor direction_like(Sampler& s, const Shape& shape) { return s.uniform(shape); }

// Every sample coordinate of theta on an h x w grid is at least `gap` pixels
// from an integer.
bool off_lattice(const AffineParams& theta, std::size_t h, std::size_t w, double gap) {
  Tensor grid = affine_grid(theta, h, w);
  for (std::size_t p = 0; p < h * w; ++p) {
    const double u = (grid[2 * p] + 1.0) * static_cast<double>(w - 1) / 2.0;
    const double v = (grid[2 * p + 1] + 1.0) * static_cast<double>(h - 1) / 2.0;
    if (std::abs(u - std::round(u)) < gap || std::abs(v - std::round(v)) < gap) return false;
  }
  return true;
}

AffineParams random_theta(Sampler& s, std::size_t h, std::size_t w) {
  std::uniform_real_distribution<double> angle(-0.6, 0.6), zoom(0.8, 1.1), shift(-0.3, 0.3), shear(-0.1, 0.1);
  for (;;) {
    const double a = angle(s.rng());
    const double z = zoom(s.rng());
    AffineParams t{{z * std::cos(a), -z * std::sin(a) + shear(s.rng()), shift(s.rng()), z * std::sin(a),
                    z * std::cos(a), shift(s.rng())}};
    if (off_lattice(t, h, w, 1e-3)) return t;
  }
}

std::vector<NamedGradCheck> ops_suite(const GradCheckOptions& o, Sampler& s) {
  std::vector<NamedGradCheck> out;
  auto run = [&](std::string name, const ScalarFunction& fn, std::vector<Tensor> inputs) {
    out.push_back({std::move(name), grad_check(fn, std::move(inputs), o)});
  };

  for (auto [name, kind] : {std::pair{"add", Elementwise::kAdd}, std::pair{"sub", Elementwise::kSub},
                            std::pair{"mul", Elementwise::kMul}}) {
    run(name,
        projected([kind](Tape& t, const std::vector<Tensor>& in) { return elementwise(t, in[0], in[1], kind); },
                  direction_like(s, {2, 3})),
        {s.uniform({2, 3}), s.uniform({2, 3})});
  }
  run("scale", projected([](Tape& t, const std::vector<Tensor>& in) { return scale(t, in[0], -1.7); },
                         direction_like(s, {4})),
      {s.uniform({4})});
  run("matmul", projected([](Tape& t, const std::vector<Tensor>& in) { return matmul(t, in[0], in[1]); },
                          direction_like(s, {3, 2})),
      {s.uniform({3, 4}), s.uniform({4, 2})});
  run("conv2d", projected([](Tape& t, const std::vector<Tensor>& in) { return conv2d(t, in[0], in[1], {1, 0}); },
                          direction_like(s, {3, 3, 3})),
      {s.uniform({2, 5, 5}), s.uniform({3, 2, 3, 3})});
  run("conv2d_strided",
      projected([](Tape& t, const std::vector<Tensor>& in) { return conv2d(t, in[0], in[1], {2, 1}); },
                direction_like(s, {3, 3, 3})),
      {s.uniform({2, 5, 5}), s.uniform({3, 2, 3, 3})});
  run("conv2d_transpose",
      projected([](Tape& t, const std::vector<Tensor>& in) { return conv2d_transpose(t, in[0], in[1], {2, 1}); },
                direction_like(s, {2, 8, 8})),
      {s.uniform({3, 4, 4}), s.uniform({3, 2, 4, 4})});
  run("add_channel_bias",
      projected([](Tape& t, const std::vector<Tensor>& in) { return add_channel_bias(t, in[0], in[1]); },
                direction_like(s, {3, 2, 2})),
      {s.uniform({3, 2, 2}), s.uniform({3})});
  run("relu", projected([](Tape& t, const std::vector<Tensor>& in) { return relu(t, in[0]); }, direction_like(s, {12})),
      {s.away_from_zero({12})});
  run("concat_split",
      projected(
          [](Tape& t, const std::vector<Tensor>& in) {
            auto [head, tail] = split_channels(t, concat_channels(t, in[0], in[1]), 1);
            return concat_channels(t, mul(t, tail, tail), head);
          },
          direction_like(s, {3, 2, 3})),
      {s.uniform({2, 2, 3}), s.uniform({1, 2, 3})});
  run("reshape",
      projected([](Tape& t, const std::vector<Tensor>& in) { return reshape(t, in[0], {6}); }, direction_like(s, {6})),
      {s.uniform({2, 3})});
  run("reduce_mean", [](Tape& t, const std::vector<Tensor>& in) { return reduce_mean(t, mul(t, in[0], in[0])); },
      {s.uniform({7})});
  run("dense",
      projected([](Tape& t, const std::vector<Tensor>& in) { return dense(t, in[0], in[1], in[2]); },
                direction_like(s, {3})),
      {s.uniform({5}), s.uniform({3, 5}), s.uniform({3})});
  run("softmax_cross_entropy",
      [](Tape& t, const std::vector<Tensor>& in) { return softmax_cross_entropy(t, in[0], 2); },
      {s.uniform({5}, -2.0, 2.0)});
  {
    Tensor a = s.uniform({9});
    Tensor gap = s.away_from_zero({9}, 0.05);
    Tensor b(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) b[i] = a[i] + gap[i];
    run("mae_loss", [](Tape& t, const std::vector<Tensor>& in) { return mae_loss(t, in[0], in[1]); }, {a, b});
  }
  return out;
}

std::vector<NamedGradCheck> stn_suite(const GradCheckOptions& o, Sampler& s) {
  std::vector<NamedGradCheck> out;
  const std::size_t h = 6, w = 7;
  for (int trial = 0; trial < 4; ++trial) {
    const AffineParams theta = random_theta(s, h, w);
    auto fn = projected(
        [h, w](Tape& t, const std::vector<Tensor>& in) { return grid_sample(t, in[1], affine_grid(t, in[0], h, w)); },
        direction_like(s, {2, h, w}));
    out.push_back({"affine_grid+grid_sample/" + std::to_string(trial),
                   grad_check(fn, {theta.to_tensor(), s.uniform({2, h, w})}, o)});
  }
  {
    const AffineParams theta = random_theta(s, h, w);
    Tensor grid = affine_grid(theta, h, w);
    auto fn = projected([](Tape& t, const std::vector<Tensor>& in) { return grid_sample(t, in[1], in[0]); },
                        direction_like(s, {3, h, w}));
    out.push_back({"grid_sample/grid", grad_check(fn, {grid, s.uniform({3, h, w})}, o)});
  }
  {
    auto fn = projected([](Tape& t, const std::vector<Tensor>& in) { return affine_grid(t, in[0], 4, 5); },
                        direction_like(s, {4, 5, 2}));
    out.push_back({"affine_grid", grad_check(fn, {s.uniform({6})}, o)});
  }
  return out;
}

std::vector<NamedGradCheck> model_suite(const GradCheckOptions& o, Sampler& s) {
  DistStnModel model(ModelConfig::tiny(3), 11);
  model.loss_weights() = {0.7, 1.3};
  // Move the pose network off the identity so sampling lands between pixels.
  Tensor fc3 = model.param("pose", "fc3.weight");
  for (double& v : fc3.data()) v = 0.05 * s.uniform({1})[0];
  Tensor bias = model.param("pose", "fc3.bias");
  const AffineParams theta = random_theta(s, 4, 4);
  for (std::size_t i = 0; i < 6; ++i) bias[i] = theta.theta[i];

  const Tensor x_i = s.uniform({1, 16, 16}, 0.0, 1.0);
  const Tensor x_j = s.uniform({1, 16, 16}, 0.0, 1.0);

  // The inputs are the model's own parameter handles, so perturbing them
  // perturbs the model.
  ScalarFunction fn = [&model, x_i, x_j](Tape& t, const std::vector<Tensor>&) {
    return pair_loss(t, model, x_i, 1, x_j, 2).total;
  };
  std::vector<NamedGradCheck> out;
  for (auto& group : model.groups()) {
    std::vector<Tensor> inputs;
    for (auto& p : group.params) inputs.push_back(p.value);
    out.push_back({"pair_loss/" + group.name, grad_check(fn, inputs, o)});
  }
  return out;
}

}  // namespace

GradScope parse_grad_scope(const std::string& text) {
  if (text == "ops") return GradScope::kOps;
  if (text == "stn") return GradScope::kStn;
  if (text == "model") return GradScope::kModel;
  throw InvalidArgument("gradcheck scope must be ops, stn or model, got '" + text + "'");
}

std::string to_string(GradScope scope) {
  switch (scope) {
    case GradScope::kOps:
      return "ops";
    case GradScope::kStn:
      return "stn";
    case GradScope::kModel:
      return "model";
  }
  return "?";
}

std::vector<NamedGradCheck> run_gradcheck_suite(GradScope scope, const GradCheckOptions& options, std::uint64_t seed) {
  Sampler s(seed);
  switch (scope) {
    case GradScope::kOps:
      return ops_suite(options, s);
    case GradScope::kStn:
      return stn_suite(options, s);
    case GradScope::kModel:
      return model_suite(options, s);
  }
  return {};
}

}  // namespace diststn
