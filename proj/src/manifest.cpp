#include "reentry/manifest.hpp"

#include <fstream>
#include <sstream>

#include "reentry/error.hpp"
#include "reentry/text.hpp"

namespace reentry {

using nlohmann::json;

std::string file_sha256(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::missing_input, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return sha256_hex(buffer.str());
}

json Manifest::to_json() const {
  return json{{"stage", stage},     {"version", version}, {"config_hash", config_hash}, {"seed", seed},
              {"inputs", inputs},   {"outputs", outputs}, {"complete", complete}};
}

Manifest Manifest::from_json(const json& doc) {
  try {
    Manifest m;
    m.stage = doc.at("stage").get<std::string>();
    m.version = doc.at("version").get<std::string>();
    m.config_hash = doc.at("config_hash").get<std::string>();
    m.seed = doc.at("seed").get<std::uint64_t>();
    m.inputs = doc.at("inputs").get<std::map<std::string, std::string>>();
    m.outputs = doc.at("outputs").get<std::map<std::string, std::string>>();
    m.complete = doc.at("complete").get<bool>();
    return m;
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, std::string("manifest: ") + e.what());
  }
}

}  // namespace reentry
