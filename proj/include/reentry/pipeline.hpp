#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "reentry/config.hpp"
#include "reentry/error.hpp"
#include "reentry/manifest.hpp"

namespace reentry {

enum class Command { ingest, label, extract, analyze, split, train, predict, evaluate, compare, report };

std::string_view to_string(Command command);
Command command_from_string(std::string_view name);

/// Process exit code for a failure kind: 2 missing input, 3 bad config,
/// 4 remote service failure, 1 anything else.
int exit_code_for(ErrorKind kind);

/// Runs pipeline stages against one output directory. Each stage reads its
/// upstream artifacts, writes its own files and a manifest under
/// <out>/manifests. Missing upstream artifacts throw ErrorKind::missing_input
/// naming the path.
class Pipeline {
 public:
  explicit Pipeline(RunConfig config);

  const RunConfig& config() const { return config_; }

  /// `args` carries command-specific options: strategy, gold, pred, compare,
  /// annotations, errors.
  void run(Command command, const nlohmann::json& args = nlohmann::json::object());

  /// Artifact paths written by the last run() call.
  const std::vector<std::filesystem::path>& last_outputs() const { return outputs_; }

 private:
  void ingest();
  void label();
  void extract();
  void analyze();
  void split();
  void train();
  void predict(const nlohmann::json& args);
  void evaluate(const nlohmann::json& args);
  void compare(const nlohmann::json& args);
  void report();

  std::filesystem::path out(const std::string& relative) const;
  std::filesystem::path require(const std::string& relative) const;
  void begin(std::string manifest_name);
  void record_input(const std::filesystem::path& path);
  void write_artifact(const std::filesystem::path& path, std::string_view contents);
  void finish();

  RunConfig config_;
  std::vector<std::filesystem::path> outputs_;
  std::optional<Manifest> manifest_;
  std::string manifest_name_;
};

}  // namespace reentry
