#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "diststn/grad_check.hpp"

namespace diststn {

enum class GradScope { kOps, kStn, kModel };

GradScope parse_grad_scope(const std::string& text);  // "ops" | "stn" | "model"
std::string to_string(GradScope scope);

struct NamedGradCheck {
  std::string name;
  GradCheckReport report;
};

// Finite-difference checks of every differentiable primitive (ops), of the
// affine grid + bilinear sampler (stn), or of the full pair objective on a
// tiny model, per parameter group (model). Probe points are drawn away from
// relu kinks, absolute-value ties and integer sample coordinates.
std::vector<NamedGradCheck> run_gradcheck_suite(GradScope scope, const GradCheckOptions& options = {},
                                                std::uint64_t seed = 7);

}  // namespace diststn
