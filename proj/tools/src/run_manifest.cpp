#include "run_manifest.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>

#include "diststn/errors.hpp"
#include "diststn/version.hpp"

namespace diststn::cli {

std::string run_timestamp() {
  std::time_t t = 0;
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch && *epoch) {
    t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  } else {
    t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::filesystem::path output_root() {
  if (const char* root = std::getenv("DISTSTN_OUTPUT_ROOT"); root && *root) return root;
  return "runs";
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j;
  j["command"] = command;
  j["argv"] = argv;
  j["config"] = config;
  j["seeds"] = seeds;
  j["artifacts"] = artifacts;
  j["version"] = kVersion;
  j["timestamp"] = run_timestamp();
  return j;
}

void RunManifest::write(const std::filesystem::path& out_dir) const {
  std::filesystem::create_directories(out_dir);
  const auto path = out_dir / "run_manifest.json";
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_json().dump(2) << '\n';
  if (!out) throw IoError("cannot write " + path.string());
}

}  // namespace diststn::cli
