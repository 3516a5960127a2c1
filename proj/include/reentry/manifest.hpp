#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

namespace reentry {

std::string file_sha256(const std::filesystem::path& path);

/// Provenance record written next to every stage's artifacts. Paths inside
/// the output directory are stored relative to it; no timestamps, so reruns
/// are byte-identical.
struct Manifest {
  std::string stage;
  std::string version;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> inputs;   // path -> sha256
  std::map<std::string, std::string> outputs;  // path -> sha256
  bool complete = false;

  nlohmann::json to_json() const;
  static Manifest from_json(const nlohmann::json& doc);
};

}  // namespace reentry
