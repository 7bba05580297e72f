#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace diststn::cli {

// Written into every output directory before any artifact.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  nlohmann::json config = nlohmann::json::object();
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> artifacts;  // relative to the output directory

  nlohmann::json to_json() const;
  void write(const std::filesystem::path& out_dir) const;
};

// UTC ISO-8601; SOURCE_DATE_EPOCH pins it for reproducible manifests.
std::string run_timestamp();

// $DISTSTN_OUTPUT_ROOT, else "runs".
std::filesystem::path output_root();

}  // namespace diststn::cli
