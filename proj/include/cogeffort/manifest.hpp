#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace cogeffort {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr const char* kManifestFile = "manifest.json";

std::string sha256_hex(std::istream& in);
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

struct StageRecord {
  std::string name;
  std::map<std::string, std::string> inputs;   // file name -> digest
  std::map<std::string, std::string> outputs;  // file name -> digest
  double wall_seconds = 0.0;
};

// manifest.json in the output directory. Stages are kept in first-run order;
// re-running a stage replaces its record.
struct RunManifest {
  std::string version = kToolVersion;
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::vector<StageRecord> stages;

  void record(StageRecord stage);
  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);

  /// Latest recorded digest of every output file.
  std::map<std::string, std::string> output_digests() const;
  /// Files (relative to dir) whose current digest differs from the record.
  std::vector<std::string> verify(const std::string& dir) const;
};

RunManifest load_manifest(const std::string& dir);  // empty manifest if absent
void save_manifest(const std::string& dir, const RunManifest& manifest);

}  // namespace cogeffort
