#include "diststn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "diststn/errors.hpp"

namespace diststn {

namespace {

double evaluate(const ScalarFunction& fn, const std::vector<Tensor>& inputs) {
  Tape off(false);
  return fn(off, inputs).item();
}

std::vector<std::size_t> pick_coordinates(std::size_t size, const GradCheckOptions& o, std::size_t input) {
  std::vector<std::size_t> all(size);
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (o.max_coords_per_input == 0 || size <= o.max_coords_per_input) return all;
  std::mt19937_64 rng(o.seed * 1000003u + input);
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(o.max_coords_per_input);
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace

std::string GradCheckReport::summary() const {
  std::ostringstream os;
  os << (passed() ? "PASS" : "FAIL") << " max_rel_err=" << max_rel_error << " tol=" << tol
     << " checked=" << checked << " failed=" << failures.size() << " excluded=" << excluded.size();
  return os.str();
}

GradCheckReport grad_check(const ScalarFunction& fn, std::vector<Tensor> inputs, const GradCheckOptions& o) {
  for (auto& t : inputs) {
    t.set_requires_grad(true);
    t.zero_grad();
  }
  {
    Tape tape;
    Tensor loss = fn(tape, inputs);
    backward(loss, tape);
  }

  GradCheckReport report;
  report.tol = o.tol;
  const double center = evaluate(fn, inputs);
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Tensor& t = inputs[k];
    std::vector<double> analytic(t.grad().begin(), t.grad().end());
    for (std::size_t i : pick_coordinates(t.size(), o, k)) {
      const double saved = t[i];
      t[i] = saved + o.step;
      const double plus = evaluate(fn, inputs);
      t[i] = saved - o.step;
      const double minus = evaluate(fn, inputs);
      t[i] = saved;

      const double numeric = (plus - minus) / (2.0 * o.step);
      const double a = analytic[i];
      const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), o.rel_floor});
      ++report.checked;
      GradCheckEntry entry{k, i, a, numeric, err};
      if (err < o.tol) {
        report.max_rel_error = std::max(report.max_rel_error, err);
        continue;
      }
      const double forward_slope = (plus - center) / o.step;
      const double backward_slope = (center - minus) / o.step;
      if (std::abs(forward_slope - backward_slope) >= std::abs(numeric - a)) {
        report.excluded.push_back(entry);
      } else {
        report.max_rel_error = std::max(report.max_rel_error, err);
        report.failures.push_back(entry);
      }
    }
  }
  return report;
}

}  // namespace diststn
