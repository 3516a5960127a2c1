#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "reentry/classify.hpp"
#include "reentry/forecast.hpp"
#include "reentry/ingest.hpp"
#include "reentry/linguistics.hpp"

namespace reentry {

/// Replaces ${NAME} in every string value with the environment variable.
/// An unset variable is a config error naming the JSON path.
nlohmann::json interpolate_env(const nlohmann::json& doc, const std::string& path = "");

struct RunConfig {
  std::filesystem::path base_dir;  // directory of the config file
  std::filesystem::path input_dump;
  std::filesystem::path lexicon_dir;
  std::optional<std::filesystem::path> community_map;
  std::filesystem::path output_dir;

  ParseMode parse_mode = ParseMode::lenient;
  OrphanPolicy orphan_policy = OrphanPolicy::drop;
  bool anonymize = true;
  std::string salt;

  std::vector<ClassifierSpec> hate;
  std::vector<ClassifierSpec> counter;
  std::map<StageTask, ClassifierSpec> predict;

  std::size_t consensus_size = 3;
  double split_ratio = 0.8;
  std::uint64_t seed = 13;
  bool stratified = false;
  std::string separator{kDefaultSeparator};
  InputVariant variant = InputVariant::pair;
  CompareOptions analysis;
  int jobs = 1;

  nlohmann::json source;  // after interpolation and overrides

  /// Hash of the effective config with the output directory removed.
  std::string hash() const;

  static RunConfig from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
  static RunConfig load(const std::filesystem::path& path);
};

/// Applies CLI-style overrides ({"seed":..,"ratio":..,"variant":..,"out":..,
/// "jobs":..,"mode":..}) to a raw config document.
nlohmann::json apply_overrides(nlohmann::json doc, const nlohmann::json& overrides);

}  // namespace reentry
