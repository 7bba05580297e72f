#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "diststn/data_synth.hpp"

namespace diststn {

// Chip file: "SARC" | u32 version=1 | u32 H | u32 W | u32 class_id |
// f32 aspect_deg | f32 depression_deg | H*W f32 amplitudes (row-major).
// Little-endian throughout.
std::vector<std::uint8_t> encode_chip(const TargetChip& chip);
TargetChip decode_chip(const std::vector<std::uint8_t>& bytes);
void write_chip(const TargetChip& chip, const std::filesystem::path& path);
TargetChip read_chip(const std::filesystem::path& path);

// One line per chip after the header "path,class_id,aspect_deg,depression_deg".
// Paths are relative to the manifest's directory.
struct ManifestRecord {
  std::string path;
  std::uint32_t class_id = 0;
  float aspect_deg = 0.0f;
  float depression_deg = 0.0f;
};

void write_manifest(const std::vector<ManifestRecord>& records, const std::filesystem::path& path);
std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path);

// Relative chip path used by write_dataset, e.g. "chips/dep17/class03_az125.00.sarc".
std::string chip_relative_path(const TargetChip& chip);

inline constexpr const char* kManifestName = "manifest.csv";

// Writes every chip plus manifest.csv under `dir`; returns the records.
std::vector<ManifestRecord> write_dataset(const std::vector<TargetChip>& chips, const std::filesystem::path& dir);

struct Dataset {
  std::vector<ManifestRecord> records;
  std::vector<TargetChip> chips;  // parallel to records
};
// Reads manifest.csv and every chip it lists; checks the metadata agrees.
Dataset read_dataset(const std::filesystem::path& dir);

}  // namespace diststn
