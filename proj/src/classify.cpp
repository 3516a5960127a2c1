#include "reentry/classify.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "reentry/error.hpp"
#include "reentry/text.hpp"

namespace reentry {

using nlohmann::json;

std::string_view to_string(Task task) {
  switch (task) {
    case Task::hate: return "hate";
    case Task::counter: return "counter";
    case Task::reentry: return "reentry";
    case Task::reentry_type: return "reentry_type";
    case Task::three_way: return "three_way";
  }
  return "hate";
}

Task task_from_string(std::string_view name) {
  for (const Task t : {Task::hate, Task::counter, Task::reentry, Task::reentry_type, Task::three_way}) {
    if (to_string(t) == name) return t;
  }
  fail(ErrorKind::config, "unknown task \"" + std::string(name) + "\"");
}

int class_count(Task task) { return task == Task::three_way ? 3 : 2; }

Decision Decision::from_scores(std::vector<double> scores) {
  if (scores.empty()) fail(ErrorKind::invalid_argument, "decision needs at least one score");
  Decision d;
  d.label = static_cast<int>(std::max_element(scores.begin(), scores.end()) - scores.begin());
  d.scores = std::move(scores);
  return d;
}

Decision Decision::one_hot(int label, int classes) {
  if (label < 0 || label >= classes) {
    fail(ErrorKind::invalid_argument, "label " + std::to_string(label) + " outside [0, " +
                                          std::to_string(classes) + ")");
  }
  Decision d;
  d.label = label;
  d.scores.assign(static_cast<std::size_t>(classes), 0.0);
  d.scores[static_cast<std::size_t>(label)] = 1.0;
  return d;
}

Decision classify_lexicon(std::string_view text, const Lexicon& lexicon, double threshold) {
  if (lexicon.entries.empty()) fail(ErrorKind::config, "lexicon " + lexicon.name + " is empty");
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    fail(ErrorKind::config, "lexicon threshold must lie in [0, 1]");
  }
  const std::vector<std::string> tokens = tokenize(text);
  if (tokens.empty()) return Decision::one_hot(0, 2);
  const double share =
      static_cast<double>(lexicon.count_matches(tokens)) / static_cast<double>(tokens.size());
  return Decision::one_hot(share >= threshold ? kPositive : 0, 2);
}

Decision Classifier::classify_one(const std::string& text) const {
  return classify(std::span<const std::string>(&text, 1)).front();
}

// ---------------------------------------------------------------------------

LexiconClassifier::LexiconClassifier(Lexicon lexicon, double threshold)
    : lexicon_(std::move(lexicon)), threshold_(threshold) {
  if (lexicon_.entries.empty()) fail(ErrorKind::config, "lexicon " + lexicon_.name + " is empty");
  if (!(threshold_ >= 0.0 && threshold_ <= 1.0)) {
    fail(ErrorKind::config, "lexicon threshold must lie in [0, 1]");
  }
}

std::vector<Decision> LexiconClassifier::classify(std::span<const std::string> texts) const {
  std::vector<Decision> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(classify_lexicon(t, lexicon_, threshold_));
  return out;
}

std::vector<Decision> NgramClassifier::classify(std::span<const std::string> texts) const {
  std::vector<Decision> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(model_.predict(t));
  return out;
}

RemoteClassifier::RemoteClassifier(RemoteOptions options, Task task)
    : options_(std::move(options)), task_(task) {}

std::vector<Decision> RemoteClassifier::classify(std::span<const std::string> texts) const {
  if (texts.empty()) return {};
  return remote_classify(options_, task_, texts);
}

ConstantClassifier::ConstantClassifier(int label, int classes) : label_(label), classes_(classes) {
  if (classes < 1 || label < 0 || label >= classes) {
    fail(ErrorKind::invalid_argument, "constant classifier label outside its class set");
  }
}

std::vector<Decision> ConstantClassifier::classify(std::span<const std::string> texts) const {
  return std::vector<Decision>(texts.size(), Decision::one_hot(label_, classes_));
}

// ---------------------------------------------------------------------------

std::string_view to_string(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::lexicon: return "lexicon";
    case ClassifierKind::ngram: return "ngram";
    case ClassifierKind::remote: return "remote";
    case ClassifierKind::constant: return "constant";
  }
  return "lexicon";
}

namespace {

ClassifierKind kind_from_string(std::string_view name) {
  for (const auto k : {ClassifierKind::lexicon, ClassifierKind::ngram, ClassifierKind::remote,
                       ClassifierKind::constant}) {
    if (to_string(k) == name) return k;
  }
  fail(ErrorKind::config, "kind: unknown classifier kind \"" + std::string(name) + "\"");
}

void need(const json& p, const char* key, bool (json::*check)() const noexcept, const char* what) {
  if (!p.contains(key) || !(p[key].*check)()) {
    fail(ErrorKind::config, std::string("parameters.") + key + ": " + what);
  }
}

RemoteOptions remote_options(const json& p) {
  RemoteOptions o;
  o.endpoint = p.at("endpoint").get<std::string>();
  o.timeout = std::chrono::milliseconds(p.value("timeout_ms", 10000));
  o.retries = p.value("retries", 2);
  o.max_batch = p.value("max_batch", std::size_t{64});
  o.max_in_flight = p.value("max_in_flight", std::size_t{4});
  return o;
}

}  // namespace

void ClassifierSpec::validate() const {
  if (!parameters.is_object()) fail(ErrorKind::config, "parameters: expected an object");
  const json& p = parameters;
  switch (kind) {
    case ClassifierKind::lexicon:
      need(p, "lexicon", &json::is_string, "path to a lexicon file is required");
      need(p, "threshold", &json::is_number, "threshold is required");
      if (const double t = p["threshold"].get<double>(); !(t >= 0.0 && t <= 1.0)) {
        fail(ErrorKind::config, "parameters.threshold: must lie in [0, 1]");
      }
      break;
    case ClassifierKind::ngram:
      if (p.contains("model") && !p["model"].is_string()) {
        fail(ErrorKind::config, "parameters.model: must be a path");
      }
      (void)NgramHyper::from_json(p.value("hyper", json::object()));
      break;
    case ClassifierKind::remote: {
      need(p, "endpoint", &json::is_string, "endpoint URL is required");
      const std::string endpoint = p["endpoint"].get<std::string>();
      if (endpoint.rfind("http://", 0) != 0) {
        fail(ErrorKind::config, "parameters.endpoint: only http:// endpoints are supported");
      }
      if (!p.contains("timeout_ms") || !p["timeout_ms"].is_number_integer() ||
          p["timeout_ms"].get<long>() <= 0) {
        fail(ErrorKind::config, "parameters.timeout_ms: must be a positive integer");
      }
      if (p.contains("retries") && (!p["retries"].is_number_integer() || p["retries"].get<int>() < 0)) {
        fail(ErrorKind::config, "parameters.retries: must be a non-negative integer");
      }
      if (p.contains("max_batch") &&
          (!p["max_batch"].is_number_integer() || p["max_batch"].get<long>() < 1)) {
        fail(ErrorKind::config, "parameters.max_batch: must be at least 1");
      }
      break;
    }
    case ClassifierKind::constant:
      need(p, "label", &json::is_number_integer, "label is required");
      if (const int l = p["label"].get<int>(); l < 0 || l >= class_count(task)) {
        fail(ErrorKind::config, "parameters.label: outside the task's class set");
      }
      break;
  }
}

ClassifierSpec ClassifierSpec::from_json(const json& doc) {
  if (!doc.is_object()) fail(ErrorKind::config, "classifier spec: expected an object");
  ClassifierSpec spec;
  if (!doc.contains("kind") || !doc["kind"].is_string()) fail(ErrorKind::config, "kind: missing");
  spec.kind = kind_from_string(doc["kind"].get<std::string>());
  if (doc.contains("task")) {
    if (!doc["task"].is_string()) fail(ErrorKind::config, "task: expected a string");
    spec.task = task_from_string(doc["task"].get<std::string>());
  }
  spec.parameters = doc.value("parameters", json::object());
  spec.validate();
  return spec;
}

json ClassifierSpec::to_json() const {
  return json{{"kind", to_string(kind)}, {"task", to_string(task)}, {"parameters", parameters}};
}

std::unique_ptr<Classifier> make_classifier(const ClassifierSpec& spec,
                                            const std::filesystem::path& base_dir) {
  spec.validate();
  const json& p = spec.parameters;
  const auto resolve = [&](const std::string& path) {
    const std::filesystem::path candidate(path);
    return candidate.is_absolute() ? candidate : base_dir / candidate;
  };
  switch (spec.kind) {
    case ClassifierKind::lexicon:
      return std::make_unique<LexiconClassifier>(load_lexicon(resolve(p["lexicon"].get<std::string>())),
                                                 p["threshold"].get<double>());
    case ClassifierKind::ngram: {
      if (!p.contains("model")) {
        fail(ErrorKind::config, "parameters.model: a trained model file is required here");
      }
      const auto path = resolve(p["model"].get<std::string>());
      std::ifstream in(path);
      if (!in) fail(ErrorKind::missing_input, "cannot open model " + path.string());
      const json doc = json::parse(in, nullptr, false);
      if (doc.is_discarded()) fail(ErrorKind::parse, "model " + path.string() + ": malformed JSON");
      return std::make_unique<NgramClassifier>(NgramModel::from_json(doc));
    }
    case ClassifierKind::remote:
      return std::make_unique<RemoteClassifier>(remote_options(p), spec.task);
    case ClassifierKind::constant:
      return std::make_unique<ConstantClassifier>(p["label"].get<int>(), class_count(spec.task));
  }
  fail(ErrorKind::internal, "unhandled classifier kind");
}

bool ensemble_consensus(std::span<const Decision> decisions) {
  if (decisions.empty()) fail(ErrorKind::config, "ensemble has no members");
  return std::all_of(decisions.begin(), decisions.end(),
                     [](const Decision& d) { return d.label == kPositive; });
}

Ensemble::Ensemble(std::vector<std::unique_ptr<Classifier>> members) : members_(std::move(members)) {
  if (members_.empty()) fail(ErrorKind::config, "ensemble has no members");
  for (const auto& m : members_) {
    if (m->num_classes() != 2) fail(ErrorKind::config, "ensemble members must be binary");
  }
}

std::vector<bool> Ensemble::label(std::span<const std::string> texts,
                                  std::vector<std::vector<int>>* votes) const {
  std::vector<std::vector<Decision>> per_member;
  per_member.reserve(members_.size());
  for (const auto& m : members_) {
    per_member.push_back(m->classify(texts));
    if (per_member.back().size() != texts.size()) {
      fail(ErrorKind::protocol, "ensemble member returned the wrong number of decisions");
    }
  }
  std::vector<bool> out(texts.size());
  if (votes) votes->assign(texts.size(), {});
  std::vector<Decision> column(members_.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    for (std::size_t m = 0; m < members_.size(); ++m) column[m] = per_member[m][i];
    out[i] = ensemble_consensus(column);
    if (votes) {
      for (const auto& d : column) (*votes)[i].push_back(d.label);
    }
  }
  return out;
}

}  // namespace reentry
