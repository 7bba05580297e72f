#include "diststn/data_synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "diststn/errors.hpp"

namespace diststn {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (std::uint64_t p : parts) h = splitmix64(h ^ splitmix64(p));
  return h;
}

double radians(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace

double normalize_degrees(double deg) {
  double d = std::fmod(deg, 360.0);
  if (d < 0.0) d += 360.0;
  if (d >= 360.0) d = 0.0;
  return d;
}

double asymmetry_score(const ClassTemplate& t) {
  double score = std::numeric_limits<double>::infinity();
  for (const auto& a : t.scatterers) {
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& b : t.scatterers) {
      nearest = std::min(nearest, std::hypot(-a.u - b.u, -a.v - b.v));
    }
    score = std::min(score, nearest);
  }
  return t.scatterers.empty() ? 0.0 : score;
}

std::vector<ClassTemplate> make_templates(std::size_t num_classes, std::size_t scatterers, std::uint64_t seed,
                                          const TemplateOptions& o) {
  if (num_classes < 2) throw InvalidArgument("need at least 2 classes");
  if (scatterers < 3) throw InvalidArgument("need at least 3 scatterers per template");
  std::vector<ClassTemplate> out;
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::mt19937_64 rng(mix({seed, 0x7e4bULL, c}));
    std::uniform_real_distribution<double> along(-o.half_length, o.half_length);
    std::uniform_real_distribution<double> across(-o.half_width, o.half_width);
    std::uniform_real_distribution<double> amp(o.min_amplitude, o.max_amplitude);
    std::uniform_real_distribution<double> center(0.0, 360.0);
    std::uniform_real_distribution<double> width(o.min_lobe_width_deg, o.max_lobe_width_deg);
    std::uniform_real_distribution<double> radius(o.min_spot_radius, o.max_spot_radius);
    ClassTemplate t;
    t.class_id = static_cast<std::uint32_t>(c);
    do {
      t.scatterers.clear();
      for (std::size_t k = 0; k < scatterers; ++k) {
        Scatterer s;
        s.u = along(rng);
        s.v = across(rng);
        s.amplitude = amp(rng);
        s.lobe_center_deg = center(rng);
        s.lobe_width_deg = width(rng);
        s.spot_radius = radius(rng);
        t.scatterers.push_back(s);
      }
    } while (asymmetry_score(t) <= o.min_asymmetry);
    out.push_back(std::move(t));
  }
  return out;
}

std::array<double, 2> rotated_position(const Scatterer& s, double aspect_deg) {
  const double a = radians(aspect_deg);
  const double c = std::cos(a);
  const double sn = std::sin(a);
  return {s.u * c - s.v * sn, s.u * sn + s.v * c};
}

double lobe_gain(const Scatterer& s, double aspect_deg, double floor) {
  double d = std::abs(normalize_degrees(aspect_deg) - normalize_degrees(s.lobe_center_deg));
  d = std::min(d, 360.0 - d);
  return floor + std::exp(-d * d / (2.0 * s.lobe_width_deg * s.lobe_width_deg));
}

TargetChip render(const ClassTemplate& t, double aspect_deg, double depression_deg,
                  std::optional<std::uint64_t> noise_seed, const RenderOptions& o) {
  if (o.size < 16) throw InvalidArgument("chip size must be at least 16");
  const std::size_t n = o.size;
  const double half = static_cast<double>(n - 1) / 2.0;
  const double depression_gain = 1.0 + 0.02 * (depression_deg - 17.0);

  std::vector<double> amplitude(n * n, 0.0);
  for (const auto& s : t.scatterers) {
    const auto [x, y] = rotated_position(s, aspect_deg);
    const double cx = (x + 1.0) * half;
    const double cy = (y + 1.0) * half;
    const double rho = s.spot_radius * half;
    const double peak = s.amplitude * lobe_gain(s, aspect_deg, o.lobe_floor) * depression_gain;
    // Spots are negligible beyond 4 radii.
    const double reach = 4.0 * rho;
    const auto r0 = static_cast<std::ptrdiff_t>(std::max(0.0, std::floor(cy - reach)));
    const auto r1 = static_cast<std::ptrdiff_t>(std::min(static_cast<double>(n - 1), std::ceil(cy + reach)));
    const auto c0 = static_cast<std::ptrdiff_t>(std::max(0.0, std::floor(cx - reach)));
    const auto c1 = static_cast<std::ptrdiff_t>(std::min(static_cast<double>(n - 1), std::ceil(cx + reach)));
    for (std::ptrdiff_t r = r0; r <= r1; ++r) {
      for (std::ptrdiff_t c = c0; c <= c1; ++c) {
        const double dx = static_cast<double>(c) - cx;
        const double dy = static_cast<double>(r) - cy;
        amplitude[static_cast<std::size_t>(r) * n + static_cast<std::size_t>(c)] +=
            peak * std::exp(-(dx * dx + dy * dy) / (2.0 * rho * rho));
      }
    }
  }

  if (noise_seed) {
    std::mt19937_64 rng(*noise_seed);
    const double looks = static_cast<double>(std::max<std::uint32_t>(o.looks, 1));
    std::gamma_distribution<double> speckle(looks, 1.0 / looks);
    for (double& a : amplitude) a = std::sqrt(a * a * speckle(rng));
  }

  TargetChip chip;
  chip.size = o.size;
  chip.class_id = t.class_id;
  chip.aspect_deg = static_cast<float>(normalize_degrees(aspect_deg));
  chip.depression_deg = static_cast<float>(depression_deg);
  chip.image.assign(amplitude.begin(), amplitude.end());
  return chip;
}

std::size_t aspect_steps(double angle_step_deg) {
  if (!(angle_step_deg > 0.0) || angle_step_deg > 360.0) throw InvalidArgument("angle step must be in (0, 360]");
  return static_cast<std::size_t>(std::ceil(360.0 / angle_step_deg - 1e-9));
}

std::vector<TargetChip> generate_dataset(const DatasetOptions& o) {
  const auto templates = make_templates(o.num_classes, o.scatterers, o.seed, o.templates);
  const std::size_t steps = aspect_steps(o.angle_step_deg);
  const double depressions[2] = {o.train_depression_deg, o.test_depression_deg};
  RenderOptions ro;
  ro.size = o.size;
  ro.looks = o.looks;
  std::vector<TargetChip> chips;
  chips.reserve(2 * steps * templates.size());
  for (std::uint64_t d = 0; d < 2; ++d) {
    for (const auto& t : templates) {
      for (std::size_t a = 0; a < steps; ++a) {
        std::optional<std::uint64_t> noise;
        if (o.speckle) noise = mix({o.seed, 0x5eedULL, t.class_id, a, d});
        chips.push_back(render(t, static_cast<double>(a) * o.angle_step_deg, depressions[d], noise, ro));
      }
    }
  }
  return chips;
}

}  // namespace diststn
