#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "diststn/tape.hpp"
#include "diststn/tensor.hpp"

namespace diststn {

// A scalar-valued function of some tensors, evaluated on the given tape.
using ScalarFunction = std::function<Tensor(Tape&, const std::vector<Tensor>&)>;

struct GradCheckOptions {
  double step = 1e-5;
  double tol = 1e-4;
  // Denominator floor of the relative error, so exact-zero gradients compare
  // on an absolute scale.
  double rel_floor = 1e-5;
  // 0 checks every coordinate; otherwise a seeded subset per input.
  std::size_t max_coords_per_input = 0;
  std::uint64_t seed = 0;
};

struct GradCheckEntry {
  std::size_t input = 0;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::vector<GradCheckEntry> failures;
  // Coordinates whose one-sided differences disagree enough to explain the
  // mismatch: the probe straddles a kink, so they are reported, not failed.
  std::vector<GradCheckEntry> excluded;
  double tol = 0.0;

  bool passed() const { return failures.empty() && max_rel_error < tol; }
  std::string summary() const;
};

// Central finite differences per coordinate against the tape gradient.
// Input gradients are overwritten.
GradCheckReport grad_check(const ScalarFunction& fn, std::vector<Tensor> inputs,
                           const GradCheckOptions& options = {});

}  // namespace diststn
