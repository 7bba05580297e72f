#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "diststn/chip_io.hpp"
#include "diststn/data_synth.hpp"

namespace diststn {

// Aspect range seen in training by non-cooperative classes.
enum class Arc { kFirstHalf, kSecondHalf };  // [0, 180) and [180, 360)

std::string to_string(Arc arc);
Arc parse_arc(const std::string& text);  // "first_half" | "second_half"
bool in_arc(double aspect_deg, Arc arc);

// Partial-aspect-angle partition, as indices into the chip list it was built from.
struct PaaSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
  std::set<std::uint32_t> noncoop_classes;
  Arc noncoop_arc = Arc::kFirstHalf;
};

struct SplitOptions {
  std::set<std::uint32_t> noncoop_classes;
  Arc arc = Arc::kFirstHalf;
  double coop_fraction = 0.5;
  double val_fraction = 0.1;
  std::uint64_t seed = 0;
  double train_depression_deg = 17.0;
  double test_depression_deg = 15.0;
};

// Training pool: chips at the training depression. Cooperative classes are
// subsampled to coop_fraction over the full circle, non-cooperative classes
// keep only their arc. Validation is a per-class stratified fraction carved
// from that pool. Test: every other chip at the test depression.
// Throws EmptyClass when a class has no usable training chips.
PaaSplit build_paa_split(std::span<const TargetChip> chips, const SplitOptions& options);

// Seeded choice of `count` non-cooperative classes out of `num_classes`.
std::set<std::uint32_t> choose_noncoop_classes(std::size_t num_classes, std::size_t count, std::uint64_t seed);

// Table-I conditions a split must satisfy; empty when sound.
std::vector<std::string> validate_split(const PaaSplit& split, std::span<const TargetChip> chips);

// JSON split manifest referring to chips by their dataset-relative paths.
void write_split_manifest(const PaaSplit& split, const Dataset& dataset, const std::filesystem::path& dataset_dir,
                          const std::filesystem::path& path);

struct LoadedSplit {
  std::filesystem::path dataset_dir;
  Dataset dataset;
  PaaSplit split;
};
LoadedSplit read_split_manifest(const std::filesystem::path& path);

}  // namespace diststn
