#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace diststn {

// One point scatterer of a synthetic target, in the target's own frame where
// the chip spans [-1, 1] on both axes.
struct Scatterer {
  double u = 0.0;
  double v = 0.0;
  double amplitude = 1.0;
  double lobe_center_deg = 0.0;  // aspect of peak return
  double lobe_width_deg = 45.0;  // Gaussian width of the aspect lobe
  double spot_radius = 0.04;     // Gaussian spot radius, normalized units
};

struct ClassTemplate {
  std::uint32_t class_id = 0;
  std::vector<Scatterer> scatterers;
};

struct TargetChip {
  std::uint32_t size = 0;     // image is size x size
  std::vector<float> image;   // row-major non-negative amplitudes
  std::uint32_t class_id = 0;
  float aspect_deg = 0.0f;    // in [0, 360)
  float depression_deg = 0.0f;
};

struct TemplateOptions {
  double half_length = 0.55;  // scatterers lie in |u| <= half_length
  double half_width = 0.28;   // and |v| <= half_width
  double min_amplitude = 0.5;
  double max_amplitude = 1.5;
  double min_lobe_width_deg = 30.0;
  double max_lobe_width_deg = 80.0;
  double min_spot_radius = 0.03;
  double max_spot_radius = 0.06;
  // Rejection threshold on asymmetry_score.
  double min_asymmetry = 0.08;
};

// Smallest distance, over scatterers, from a scatterer's 180-degree rotated
// position to the nearest scatterer of the layout. Zero for a layout that is
// symmetric under half-turn rotation.
double asymmetry_score(const ClassTemplate& t);

// C templates of K scatterers each, a pure function of the arguments.
// Layouts failing the asymmetry threshold are redrawn.
std::vector<ClassTemplate> make_templates(std::size_t num_classes, std::size_t scatterers, std::uint64_t seed,
                                          const TemplateOptions& options = {});

// Folds an angle into [0, 360).
double normalize_degrees(double deg);

// Position of a scatterer after rotating the target by `aspect_deg`.
std::array<double, 2> rotated_position(const Scatterer& s, double aspect_deg);

// Aspect-dependent gain: floor + exp(-d^2 / (2 w^2)), d the circular distance
// from the lobe centre.
double lobe_gain(const Scatterer& s, double aspect_deg, double floor = 0.1);

struct RenderOptions {
  std::uint32_t size = 64;
  double lobe_floor = 0.1;
  // Speckle looks: 1 is unit-mean exponential intensity noise.
  std::uint32_t looks = 1;
};

// Rasterizes the template rotated by `aspect_deg`. Amplitudes scale by
// 1 + 0.02*(depression - 17). With a noise seed, intensities are multiplied
// by unit-mean speckle and mapped back to amplitude.
TargetChip render(const ClassTemplate& t, double aspect_deg, double depression_deg,
                  std::optional<std::uint64_t> noise_seed, const RenderOptions& options = {});

struct DatasetOptions {
  std::size_t num_classes = 10;
  std::size_t scatterers = 8;
  std::uint32_t size = 64;
  double angle_step_deg = 5.0;
  std::uint64_t seed = 0;
  double train_depression_deg = 17.0;
  double test_depression_deg = 15.0;
  bool speckle = true;
  std::uint32_t looks = 1;
  TemplateOptions templates;
};

// Every class at every aspect step, at both depressions (train first).
// Each chip's noise stream derives from (seed, class, aspect index, depression
// index), so the result does not depend on generation order.
std::vector<TargetChip> generate_dataset(const DatasetOptions& options);

std::size_t aspect_steps(double angle_step_deg);

}  // namespace diststn
