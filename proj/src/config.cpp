#include "reentry/config.hpp"

#include <cstdlib>
#include <fstream>

#include "reentry/error.hpp"
#include "reentry/text.hpp"

namespace reentry {

using nlohmann::json;
namespace fs = std::filesystem;

json interpolate_env(const json& doc, const std::string& path) {
  if (doc.is_object()) {
    json out = json::object();
    for (const auto& [key, value] : doc.items()) {
      out[key] = interpolate_env(value, path.empty() ? key : path + "." + key);
    }
    return out;
  }
  if (doc.is_array()) {
    json out = json::array();
    for (std::size_t i = 0; i < doc.size(); ++i) out.push_back(interpolate_env(doc[i], path + "[" + std::to_string(i) + "]"));
    return out;
  }
  if (!doc.is_string()) return doc;
  const std::string& s = doc.get_ref<const std::string&>();
  std::string out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const std::size_t open = s.find("${", pos);
    if (open == std::string::npos) {
      out.append(s, pos);
      break;
    }
    const std::size_t close = s.find('}', open + 2);
    if (close == std::string::npos) fail(ErrorKind::config, path + ": unterminated ${ in \"" + s + "\"");
    out.append(s, pos, open - pos);
    const std::string name = s.substr(open + 2, close - open - 2);
    const char* value = std::getenv(name.c_str());
    if (!value) fail(ErrorKind::config, path + ": environment variable " + name + " is not set");
    out += value;
    pos = close + 1;
  }
  return out;
}

json apply_overrides(json doc, const json& overrides) {
  if (!doc.is_object()) fail(ErrorKind::config, "config: expected a JSON object");
  if (overrides.is_null()) return doc;
  if (!overrides.is_object()) fail(ErrorKind::invalid_argument, "overrides: expected a JSON object");
  for (const auto& [key, value] : overrides.items()) {
    if (key == "seed") {
      doc["split"]["seed"] = value;
    } else if (key == "ratio") {
      doc["split"]["ratio"] = value;
    } else if (key == "variant") {
      doc["variant"] = value;
    } else if (key == "out") {
      if (!value.is_string()) fail(ErrorKind::config, "out: expected a path");
      // Command-line paths are relative to the working directory, not the config.
      doc["paths"]["output_dir"] = fs::absolute(value.get<std::string>()).lexically_normal().string();
    } else if (key == "jobs") {
      doc["jobs"] = value;
    } else if (key == "mode") {
      doc["ingest"]["mode"] = value;
    } else {
      fail(ErrorKind::invalid_argument, "unknown override \"" + key + "\"");
    }
  }
  return doc;
}

namespace {

// Runs `body`, prefixing config errors with the field path being read.
template <typename F>
auto at_field(const std::string& field, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::config) throw;
    fail(ErrorKind::config, field + "." + e.what());
  } catch (const json::exception& e) {
    fail(ErrorKind::config, field + ": " + e.what());
  }
}

template <typename T>
T field_value(const json& obj, const char* key, const std::string& path, T fallback) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorKind::config, path + "." + key + ": wrong type");
  }
}

fs::path existing_path(const fs::path& base, const std::string& value, const std::string& field) {
  if (value.empty()) fail(ErrorKind::config, field + ": empty path");
  fs::path p(value);
  if (p.is_relative()) p = base / p;
  if (!fs::exists(p)) fail(ErrorKind::config, field + ": " + p.string() + " does not exist");
  return p;
}

std::vector<ClassifierSpec> member_specs(const json& classifiers, const char* key, Task task, const fs::path& base) {
  std::vector<ClassifierSpec> specs;
  const std::string field = std::string("classifiers.") + key;
  if (!classifiers.contains(key)) return specs;
  const json& list = classifiers[key];
  if (!list.is_array()) fail(ErrorKind::config, field + ": expected a list of classifier specs");
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string where = field + "[" + std::to_string(i) + "]";
    ClassifierSpec spec = at_field(where, [&] { return ClassifierSpec::from_json(list[i]); });
    if (list[i].contains("task") && spec.task != task) {
      fail(ErrorKind::config, where + ".task: expected " + std::string(to_string(task)));
    }
    spec.task = task;
    if (spec.kind == ClassifierKind::lexicon) {
      existing_path(base, spec.parameters["lexicon"].get<std::string>(), where + ".parameters.lexicon");
    }
    if (spec.kind == ClassifierKind::ngram && !spec.parameters.contains("model")) {
      fail(ErrorKind::config, where + ".parameters.model: labeling members need a trained model file");
    }
    specs.push_back(std::move(spec));
  }
  return specs;
}

ClassifierSpec default_predict_spec() {
  ClassifierSpec spec;
  spec.kind = ClassifierKind::ngram;
  spec.task = Task::three_way;
  return spec;
}

}  // namespace

RunConfig RunConfig::from_json(const json& raw, const fs::path& base_dir) {
  if (!raw.is_object()) fail(ErrorKind::config, "config: expected a JSON object");
  const json doc = interpolate_env(raw);
  RunConfig c;
  c.base_dir = base_dir;
  c.source = doc;

  const json paths = doc.value("paths", json::object());
  if (!paths.is_object()) fail(ErrorKind::config, "paths: expected an object");
  if (const auto dump = field_value<std::string>(paths, "input_dump", "paths", ""); !dump.empty()) {
    c.input_dump = existing_path(base_dir, dump, "paths.input_dump");
  }
  if (const auto dir = field_value<std::string>(paths, "lexicon_dir", "paths", ""); !dir.empty()) {
    c.lexicon_dir = existing_path(base_dir, dir, "paths.lexicon_dir");
  }
  if (const auto map = field_value<std::string>(paths, "community_map", "paths", ""); !map.empty()) {
    c.community_map = existing_path(base_dir, map, "paths.community_map");
  }
  const auto out = field_value<std::string>(paths, "output_dir", "paths", "");
  if (out.empty()) fail(ErrorKind::config, "paths.output_dir: required");
  c.output_dir = fs::path(out).is_relative() ? base_dir / out : fs::path(out);

  const json ingest = doc.value("ingest", json::object());
  const auto mode = field_value<std::string>(ingest, "mode", "ingest", "lenient");
  if (mode == "strict") {
    c.parse_mode = ParseMode::strict;
  } else if (mode != "lenient") {
    fail(ErrorKind::config, "ingest.mode: expected strict or lenient");
  }
  const auto policy = field_value<std::string>(ingest, "orphan_policy", "ingest", "drop");
  if (policy == "promote_to_root") {
    c.orphan_policy = OrphanPolicy::promote_to_root;
  } else if (policy != "drop") {
    fail(ErrorKind::config, "ingest.orphan_policy: expected drop or promote_to_root");
  }
  c.anonymize = field_value<bool>(ingest, "anonymize", "ingest", true);
  c.salt = field_value<std::string>(ingest, "salt", "ingest", "");

  const json classifiers = doc.value("classifiers", json::object());
  if (!classifiers.is_object()) fail(ErrorKind::config, "classifiers: expected an object");
  c.hate = member_specs(classifiers, "hate", Task::hate, base_dir);
  c.counter = member_specs(classifiers, "counter", Task::counter, base_dir);

  c.consensus_size = field_value<std::size_t>(doc, "consensus_size", "config", 3);
  if (c.consensus_size == 0) fail(ErrorKind::config, "consensus_size: must be positive");
  for (const auto* members : {&c.hate, &c.counter}) {
    if (!members->empty() && members->size() != c.consensus_size) {
      fail(ErrorKind::config, std::string("classifiers.") + (members == &c.hate ? "hate" : "counter") + ": expected " +
                                  std::to_string(c.consensus_size) + " members (consensus_size)");
    }
  }

  const auto stage_spec = [&](const json& spec_doc, StageTask task, const std::string& where) {
    ClassifierSpec spec = at_field(where, [&] { return ClassifierSpec::from_json(spec_doc); });
    spec.task = classifier_task(task);
    at_field(where, [&] { spec.validate(); });
    return spec;
  };
  for (const StageTask t : {StageTask::reentry, StageTask::reentry_type, StageTask::three_way}) {
    ClassifierSpec spec = default_predict_spec();
    spec.task = classifier_task(t);
    c.predict[t] = spec;
  }
  if (classifiers.contains("predict")) {
    const json& predict = classifiers["predict"];
    if (!predict.is_object()) fail(ErrorKind::config, "classifiers.predict: expected an object");
    if (predict.contains("kind")) {
      for (auto& [task, spec] : c.predict) spec = stage_spec(predict, task, "classifiers.predict");
    } else {
      for (const auto& [key, value] : predict.items()) {
        StageTask task;
        if (key == "reentry") {
          task = StageTask::reentry;
        } else if (key == "reentry_type") {
          task = StageTask::reentry_type;
        } else if (key == "three_way") {
          task = StageTask::three_way;
        } else {
          fail(ErrorKind::config, "classifiers.predict." + key + ": unknown stage task");
        }
        c.predict[task] = stage_spec(value, task, "classifiers.predict." + key);
      }
    }
  }

  const json split = doc.value("split", json::object());
  c.split_ratio = field_value<double>(split, "ratio", "split", 0.8);
  if (!(c.split_ratio > 0.0 && c.split_ratio < 1.0)) fail(ErrorKind::config, "split.ratio: must lie in (0, 1)");
  c.seed = field_value<std::uint64_t>(split, "seed", "split", 13);
  c.stratified = field_value<bool>(split, "stratified", "split", false);

  c.separator = field_value<std::string>(doc, "separator", "config", std::string(kDefaultSeparator));
  if (c.separator.empty()) fail(ErrorKind::config, "separator: must not be empty");
  c.variant = at_field("variant", [&] {
    return variant_from_string(field_value<std::string>(doc, "variant", "config", "pair"));
  });

  const json analysis = doc.value("analysis", json::object());
  c.analysis.alpha = field_value<double>(analysis, "alpha", "analysis", 0.05);
  if (!(c.analysis.alpha > 0.0 && c.analysis.alpha < 1.0)) fail(ErrorKind::config, "analysis.alpha: must lie in (0, 1)");
  const auto basis = field_value<std::string>(analysis, "basis", "analysis", "mean");
  if (basis == "median") {
    c.analysis.basis = DirectionBasis::median;
  } else if (basis != "mean") {
    fail(ErrorKind::config, "analysis.basis: expected mean or median");
  }
  c.analysis.by_community = field_value<bool>(analysis, "by_community", "analysis", true);

  c.jobs = field_value<int>(doc, "jobs", "config", 1);
  if (c.jobs < 1) fail(ErrorKind::config, "jobs: must be at least 1");
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::config, "cannot open config " + path.string());
  const json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) fail(ErrorKind::config, "config " + path.string() + ": malformed JSON");
  return from_json(doc, fs::absolute(path).parent_path());
}

std::string RunConfig::hash() const {
  json doc = source;
  // Where results go and how many threads produce them do not change them.
  if (doc.contains("paths") && doc["paths"].is_object()) doc["paths"].erase("output_dir");
  doc.erase("jobs");
  return sha256_hex(doc.dump());
}

}  // namespace reentry
