#include "reentry/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "reentry/error.hpp"
#include "reentry/eval.hpp"
#include "reentry/text.hpp"

namespace reentry {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::array<Command, 10> kCommands{Command::ingest,  Command::label,    Command::extract, Command::analyze,
                                            Command::split,   Command::train,    Command::predict, Command::evaluate,
                                            Command::compare, Command::report};

const std::vector<std::string> kOutcomeNames{"no_reentry", "hateful", "non_hateful"};

// The stage that produces each upstream artifact, for error messages.
std::string producer_of(const std::string& relative) {
  static const std::vector<std::pair<std::string, std::string>> producers{
      {"trees.jsonl", "ingest"},  {"labels.jsonl", "label"}, {"pairs.jsonl", "extract"},
      {"split.json", "split"},    {"models/", "train"},      {"predictions/", "predict"},
  };
  for (const auto& [prefix, stage] : producers) {
    if (relative.rfind(prefix, 0) == 0) return stage;
  }
  return "";
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::missing_input, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

json read_json_file(const fs::path& path) {
  const json doc = json::parse(read_file(path), nullptr, false);
  if (doc.is_discarded()) fail(ErrorKind::parse, path.string() + ": malformed JSON");
  return doc;
}

std::vector<json> read_jsonl(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::vector<json> records;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded()) {
      fail(ErrorKind::parse, path.string() + ":" + std::to_string(number) + ": malformed JSON");
    }
    records.push_back(std::move(record));
  }
  return records;
}

template <typename Range, typename F>
std::string jsonl(const Range& items, F&& to_record) {
  std::string out;
  for (const auto& item : items) {
    out += to_record(item).dump();
    out += '\n';
  }
  return out;
}

// Splits `n` items into at most `jobs` contiguous chunks and runs `work` on
// each; results are concatenated in input order.
template <typename T, typename F>
std::vector<T> chunked(std::size_t n, int jobs, F&& work) {
  const std::size_t parts = std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(jobs), n));
  if (parts == 1) return work(std::size_t{0}, n);
  std::vector<std::future<std::vector<T>>> futures;
  for (std::size_t p = 0; p < parts; ++p) {
    const std::size_t begin = n * p / parts, end = n * (p + 1) / parts;
    futures.push_back(std::async(std::launch::async, [&work, begin, end] { return work(begin, end); }));
  }
  std::vector<T> out;
  out.reserve(n);
  for (auto& f : futures) {
    auto part = f.get();
    std::move(part.begin(), part.end(), std::back_inserter(out));
  }
  return out;
}

std::vector<ConversationPair> select_pairs(const std::vector<ConversationPair>& pairs,
                                           const std::vector<std::string>& ids) {
  std::map<std::string, const ConversationPair*> by_id;
  for (const auto& p : pairs) by_id.emplace(p.id(), &p);
  std::vector<ConversationPair> out;
  for (const auto& id : ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) fail(ErrorKind::inconsistency, "split names pair " + id + " which pairs.jsonl lacks");
    out.push_back(*it->second);
  }
  return out;
}

SplitAssignment read_split(const fs::path& path) {
  const json doc = read_json_file(path);
  try {
    SplitAssignment s;
    s.train = doc.at("train").get<std::vector<std::string>>();
    s.test = doc.at("test").get<std::vector<std::string>>();
    s.seed = doc.at("seed").get<std::uint64_t>();
    s.ratio = doc.at("ratio").get<double>();
    return s;
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, path.string() + ": " + e.what());
  }
}

// Model files: a trained n-gram model, an adapter spec, or the baseline.
StageModel load_stage_model(const fs::path& path, const fs::path& base_dir) {
  const json doc = read_json_file(path);
  const std::string format = doc.value("format", std::string());
  if (format == "classifier-spec/1") {
    return make_classifier(ClassifierSpec::from_json(doc.at("spec")), base_dir);
  }
  return std::make_shared<NgramClassifier>(NgramModel::from_json(doc));
}

struct Prediction {
  std::string pair_id;
  Outcome predicted;
};

std::vector<Prediction> read_predictions(const fs::path& path) {
  std::vector<Prediction> out;
  for (const json& r : read_jsonl(path)) {
    if (!r.contains("pair_id") || !r.contains("predicted")) {
      fail(ErrorKind::parse, path.string() + ": prediction records need pair_id and predicted");
    }
    out.push_back({r["pair_id"].get<std::string>(), outcome_from_string(r["predicted"].get<std::string>())});
  }
  return out;
}

// Accepts pairs.jsonl records or bare {"pair_id","outcome"} records.
std::map<std::string, Outcome> read_gold(const fs::path& path) {
  std::map<std::string, Outcome> gold;
  for (const json& r : read_jsonl(path)) {
    if (!r.contains("pair_id") || !r.contains("outcome")) {
      fail(ErrorKind::parse, path.string() + ": gold records need pair_id and outcome");
    }
    gold[r["pair_id"].get<std::string>()] = outcome_from_string(r["outcome"].get<std::string>());
  }
  return gold;
}

struct Joined {
  std::vector<std::string> ids;
  std::vector<int> gold;
  std::vector<int> predicted;
};

Joined join(const std::map<std::string, Outcome>& gold, const std::vector<Prediction>& predictions,
            const fs::path& source) {
  Joined j;
  std::set<std::string> seen;
  for (const auto& p : predictions) {
    const auto it = gold.find(p.pair_id);
    if (it == gold.end()) fail(ErrorKind::inconsistency, source.string() + ": pair " + p.pair_id + " has no gold label");
    if (!seen.insert(p.pair_id).second) fail(ErrorKind::inconsistency, source.string() + ": duplicate pair " + p.pair_id);
    j.ids.push_back(p.pair_id);
    j.gold.push_back(to_index(it->second));
    j.predicted.push_back(to_index(p.predicted));
  }
  return j;
}

json evaluate_predictions(const Joined& j) {
  json result;
  const ConfusionMatrix three = confusion(j.gold, j.predicted, kOutcomeNames);
  result["three_way"] = {{"confusion", to_json(three)}, {"metrics", to_json(prf(three))}};

  std::vector<int> gold_bin, pred_bin, gold_type, pred_type;
  for (std::size_t i = 0; i < j.gold.size(); ++i) {
    // Reentry first, as the binary task reports it.
    gold_bin.push_back(j.gold[i] == 0 ? 1 : 0);
    pred_bin.push_back(j.predicted[i] == 0 ? 1 : 0);
    if (j.gold[i] != 0) {
      gold_type.push_back(j.gold[i] == 1 ? 0 : 1);
      pred_type.push_back(j.predicted[i] == 1 ? 0 : 1);
    }
  }
  const ConfusionMatrix binary = confusion(gold_bin, pred_bin, {"reentry", "no_reentry"});
  result["reentry"] = {{"confusion", to_json(binary)}, {"metrics", to_json(prf(binary))}};
  if (!gold_type.empty()) {
    const ConfusionMatrix type = confusion(gold_type, pred_type, {"hateful", "non_hateful"});
    result["reentry_type"] = {{"confusion", to_json(type)}, {"metrics", to_json(prf(type))}};
  }
  return result;
}

std::string relative_to(const fs::path& path, const fs::path& base) {
  const fs::path rel = fs::proximate(path, base);
  const std::string s = rel.generic_string();
  return s.rfind("..", 0) == 0 ? std::string() : s;
}

}  // namespace

std::string_view to_string(Command command) {
  switch (command) {
    case Command::ingest: return "ingest";
    case Command::label: return "label";
    case Command::extract: return "extract";
    case Command::analyze: return "analyze";
    case Command::split: return "split";
    case Command::train: return "train";
    case Command::predict: return "predict";
    case Command::evaluate: return "evaluate";
    case Command::compare: return "compare";
    case Command::report: return "report";
  }
  return "report";
}

Command command_from_string(std::string_view name) {
  for (const Command c : kCommands) {
    if (to_string(c) == name) return c;
  }
  fail(ErrorKind::invalid_argument, "unknown command \"" + std::string(name) + "\"");
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::missing_input: return 2;
    case ErrorKind::config: return 3;
    case ErrorKind::transport:
    case ErrorKind::protocol: return 4;
    default: return 1;
  }
}

Pipeline::Pipeline(RunConfig config) : config_(std::move(config)) {}

void Pipeline::run(Command command, const json& args) {
  outputs_.clear();
  manifest_.reset();
  const json a = args.is_null() ? json::object() : args;
  if (!a.is_object()) fail(ErrorKind::invalid_argument, "command arguments must be a JSON object");
  try {
    switch (command) {
      case Command::ingest: ingest(); break;
      case Command::label: label(); break;
      case Command::extract: extract(); break;
      case Command::analyze: analyze(); break;
      case Command::split: split(); break;
      case Command::train: train(); break;
      case Command::predict: predict(a); break;
      case Command::evaluate: evaluate(a); break;
      case Command::compare: compare(a); break;
      case Command::report: report(); break;
    }
  } catch (...) {
    // Whatever was written stays, flagged as incomplete.
    if (manifest_ && !manifest_->complete) {
      try {
        std::ofstream file(out("manifests/" + manifest_name_ + ".json"), std::ios::binary);
        file << manifest_->to_json().dump(2) << '\n';
      } catch (...) {
      }
    }
    throw;
  }
}

fs::path Pipeline::out(const std::string& relative) const { return config_.output_dir / relative; }

fs::path Pipeline::require(const std::string& relative) const {
  const fs::path path = out(relative);
  if (!fs::exists(path)) {
    const std::string stage = producer_of(relative);
    fail(ErrorKind::missing_input, "missing input " + path.string() + (stage.empty() ? "" : " (run `" + stage + "` first)"));
  }
  return path;
}

void Pipeline::begin(std::string manifest_name) {
  std::error_code ec;
  fs::create_directories(out("manifests"), ec);
  if (ec) fail(ErrorKind::io, "cannot create " + out("manifests").string() + ": " + ec.message());
  Manifest m;
  m.stage = manifest_name;
  m.version = REENTRY_VERSION;
  m.config_hash = config_.hash();
  m.seed = config_.seed;
  manifest_ = std::move(m);
  manifest_name_ = std::move(manifest_name);
}

namespace {

// Inside the output directory paths are relative to it, next to the config
// relative to that, otherwise absolute.
std::string manifest_key(const fs::path& path, const fs::path& output_dir, const fs::path& base_dir) {
  const fs::path absolute = fs::absolute(path).lexically_normal();
  if (auto rel = relative_to(absolute, fs::absolute(output_dir).lexically_normal()); !rel.empty()) return rel;
  if (auto rel = relative_to(absolute, fs::absolute(base_dir).lexically_normal()); !rel.empty()) return "config:" + rel;
  return absolute.generic_string();
}

}  // namespace

void Pipeline::record_input(const fs::path& path) {
  manifest_->inputs[manifest_key(path, config_.output_dir, config_.base_dir)] = file_sha256(path);
}

void Pipeline::write_artifact(const fs::path& path, std::string_view contents) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  if (ec) fail(ErrorKind::io, "cannot create " + path.parent_path().string() + ": " + ec.message());
  {
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) fail(ErrorKind::io, "cannot write " + path.string());
    file.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!file) fail(ErrorKind::io, "write failed for " + path.string());
  }
  outputs_.push_back(path);
  manifest_->outputs[manifest_key(path, config_.output_dir, config_.base_dir)] = sha256_hex(contents);
}

void Pipeline::finish() {
  manifest_->complete = true;
  const fs::path path = out("manifests/" + manifest_name_ + ".json");
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) fail(ErrorKind::io, "cannot write " + path.string());
  file << manifest_->to_json().dump(2) << '\n';
  outputs_.push_back(path);
}

// ---------------------------------------------------------------------------

void Pipeline::ingest() {
  if (config_.input_dump.empty()) fail(ErrorKind::config, "paths.input_dump: required for ingest");
  begin("ingest");
  record_input(config_.input_dump);
  ParseResult parsed = parse_dump_file(config_.input_dump, config_.parse_mode);
  if (config_.anonymize) {
    for (Comment& c : parsed.comments) {
      c.author = pseudonymize_author(c.author, config_.salt);
      c.body = mask_pii(c.body);
    }
  }
  const Forest forest = build_trees(parsed.comments, config_.orphan_policy);

  write_artifact(out("trees.jsonl"), jsonl(forest.trees, [](const DialogueTree& t) { return tree_to_json(t); }));
  write_artifact(out("parse_errors.jsonl"), jsonl(parsed.errors, [](const ParseError& e) {
                   return json{{"line", e.line}, {"reason", e.reason}};
                 }));
  write_artifact(out("orphans.jsonl"), jsonl(forest.orphans, [](const OrphanReport& o) {
                   return json{{"comment_id", o.comment_id}, {"missing_parent", o.missing_parent}, {"reason", o.reason}};
                 }));
  finish();
}

void Pipeline::label() {
  if (config_.hate.empty()) fail(ErrorKind::config, "classifiers.hate: required for label");
  if (config_.counter.empty()) fail(ErrorKind::config, "classifiers.counter: required for label");
  const fs::path trees_path = require("trees.jsonl");
  begin("label");
  record_input(trees_path);
  for (const auto* specs : {&config_.hate, &config_.counter}) {
    for (const auto& spec : *specs) {
      if (spec.kind == ClassifierKind::lexicon) {
        const fs::path p(spec.parameters["lexicon"].get<std::string>());
        record_input(p.is_absolute() ? p : config_.base_dir / p);
      }
    }
  }

  const auto build = [&](const std::vector<ClassifierSpec>& specs) {
    std::vector<std::unique_ptr<Classifier>> members;
    for (const auto& spec : specs) members.push_back(make_classifier(spec, config_.base_dir));
    return Ensemble(std::move(members));
  };
  const Ensemble hate = build(config_.hate);
  const Ensemble counter = build(config_.counter);

  std::vector<std::string> ids, texts;
  for (const DialogueTree& tree : read_trees_file(trees_path)) {
    for (const Comment& c : tree.comments()) {
      ids.emplace_back(strip_kind_prefix(c.id));
      texts.push_back(c.body);
    }
  }

  struct Votes {
    bool hs;
    bool cs;
    std::vector<int> hs_votes;
    std::vector<int> cs_votes;
  };
  const std::vector<Votes> votes = chunked<Votes>(texts.size(), config_.jobs, [&](std::size_t b, std::size_t e) {
    const std::span<const std::string> part(texts.data() + b, e - b);
    std::vector<std::vector<int>> hv, cv;
    const auto hs = hate.label(part, &hv);
    const auto cs = counter.label(part, &cv);
    std::vector<Votes> out;
    for (std::size_t i = 0; i < part.size(); ++i) out.push_back({hs[i], cs[i], hv[i], cv[i]});
    return out;
  });

  std::string contents;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    contents += json{{"id", ids[i]},
                     {"hs", votes[i].hs},
                     {"cs", votes[i].cs},
                     {"hs_votes", votes[i].hs_votes},
                     {"cs_votes", votes[i].cs_votes}}
                    .dump();
    contents += '\n';
  }
  write_artifact(out("labels.jsonl"), contents);
  finish();
}

void Pipeline::extract() {
  const fs::path trees_path = require("trees.jsonl");
  const fs::path labels_path = require("labels.jsonl");
  begin("extract");
  record_input(trees_path);
  record_input(labels_path);
  CommunityMap communities = CommunityMap::builtin();
  if (config_.community_map) {
    record_input(*config_.community_map);
    communities = CommunityMap::load(*config_.community_map);
  }

  std::set<std::string> hs_ids, cs_ids, labelled;
  for (const json& r : read_jsonl(labels_path)) {
    const std::string id = r.at("id").get<std::string>();
    labelled.insert(id);
    if (r.at("hs").get<bool>()) hs_ids.insert(id);
    if (r.at("cs").get<bool>()) cs_ids.insert(id);
  }
  const HatefulPredicate is_hateful = [&](const Comment& c) {
    return hs_ids.count(std::string(strip_kind_prefix(c.id))) > 0;
  };

  std::vector<ConversationPair> pairs;
  for (const DialogueTree& tree : read_trees_file(trees_path)) {
    std::set<std::string> tree_hs, tree_cs;
    for (const Comment& c : tree.comments()) {
      std::string id(strip_kind_prefix(c.id));
      if (!labelled.count(id)) fail(ErrorKind::inconsistency, "comment " + c.id + " has no label; labels.jsonl is stale");
      if (hs_ids.count(id)) tree_hs.insert(id);
      if (cs_ids.count(id)) tree_cs.insert(std::move(id));
    }
    for (const PairDraft& draft : find_pairs(tree, tree_hs, tree_cs)) {
      pairs.push_back(make_pair(draft, label_reentry(draft, tree, is_hateful), communities));
    }
  }

  // Every pair lands in exactly one outcome, and a reentry comment exists
  // exactly for the reentry outcomes.
  std::array<std::size_t, 3> counts{};
  for (const auto& p : pairs) {
    ++counts[static_cast<std::size_t>(to_index(p.outcome))];
    if (p.reentry.has_value() != (p.outcome != Outcome::no_reentry)) {
      fail(ErrorKind::internal, "pair " + p.id() + " violates the outcome partition");
    }
  }
  if (counts[0] + counts[1] + counts[2] != pairs.size()) fail(ErrorKind::internal, "outcome partition identity failed");

  write_artifact(out("pairs.jsonl"), jsonl(pairs, [](const ConversationPair& p) { return pair_to_json(p); }));
  const auto rows = summarize_corpus(pairs);
  write_artifact(out("corpus_summary.md"), render_summary_markdown(rows));
  write_artifact(out("corpus_summary.csv"), render_summary_csv(rows));
  finish();
}

void Pipeline::analyze() {
  if (config_.lexicon_dir.empty()) fail(ErrorKind::config, "paths.lexicon_dir: required for analyze");
  const fs::path pairs_path = require("pairs.jsonl");
  begin("analyze");
  record_input(pairs_path);
  std::vector<fs::path> lexicon_files;
  for (const auto& entry : fs::directory_iterator(config_.lexicon_dir)) {
    if (entry.path().extension() == ".json") lexicon_files.push_back(entry.path());
  }
  std::sort(lexicon_files.begin(), lexicon_files.end());
  for (const auto& p : lexicon_files) record_input(p);

  const auto lexicons = load_lexicon_dir(config_.lexicon_dir);
  const auto pairs = read_pairs_file(pairs_path);
  const std::pair<Grouping, const char*> analyses[] = {{Grouping::reentry_vs_no, "linguistics_reentry"},
                                                       {Grouping::hateful_vs_nonhateful, "linguistics_type"}};
  for (const auto& [grouping, stem] : analyses) {
    const auto results = compare_groups(pairs, lexicons, grouping, config_.analysis);
    write_artifact(out(std::string(stem) + ".csv"), render_comparison_csv(results));
    write_artifact(out(std::string(stem) + ".md"), render_comparison_markdown(results));
  }
  finish();
}

void Pipeline::split() {
  const fs::path pairs_path = require("pairs.jsonl");
  begin("split");
  record_input(pairs_path);
  const auto pairs = read_pairs_file(pairs_path);
  std::vector<std::string> ids;
  std::vector<int> labels;
  for (const auto& p : pairs) {
    ids.push_back(p.id());
    labels.push_back(to_index(p.outcome));
  }
  const SplitAssignment s = config_.stratified ? split_corpus_stratified(ids, labels, config_.split_ratio, config_.seed)
                                               : split_corpus(ids, config_.split_ratio, config_.seed);
  const json doc{{"seed", s.seed}, {"ratio", s.ratio}, {"stratified", config_.stratified},
                 {"train", s.train}, {"test", s.test}};
  write_artifact(out("split.json"), doc.dump(2) + "\n");
  finish();
}

void Pipeline::train() {
  const fs::path pairs_path = require("pairs.jsonl");
  const fs::path split_path = require("split.json");
  const std::string variant(to_string(config_.variant));
  begin("train_" + variant);
  record_input(pairs_path);
  record_input(split_path);
  const auto train_pairs = select_pairs(read_pairs_file(pairs_path), read_split(split_path).train);

  for (const StageTask task : {StageTask::reentry, StageTask::reentry_type, StageTask::three_way}) {
    const ClassifierSpec& spec = config_.predict.at(task);
    const fs::path path = out("models/" + variant + "/" + std::string(to_string(task)) + ".json");
    if (spec.kind != ClassifierKind::ngram) {
      // Trained elsewhere; keep the adapter spec so predict can rebuild it.
      (void)train_stage(task, train_pairs, config_.variant, spec, config_.base_dir, config_.separator);
      write_artifact(path, json{{"format", "classifier-spec/1"}, {"spec", spec.to_json()}}.dump(2) + "\n");
      continue;
    }
    const StageModel model = train_stage(task, train_pairs, config_.variant, spec, config_.base_dir, config_.separator);
    const auto& ngram = dynamic_cast<const NgramClassifier&>(*model).model();
    if (const auto constant = ngram.constant_label()) {
      std::cerr << "warning: " << to_string(task) << " training data has a single class; the model always predicts "
                << *constant << '\n';
    }
    write_artifact(path, ngram.to_json().dump() + "\n");
  }

  json baseline{{"format", "majority-baseline/1"}};
  for (const StageTask task : {StageTask::reentry, StageTask::reentry_type, StageTask::three_way}) {
    const StageData data = stage_data(train_pairs, task, InputVariant::counter_only, config_.separator);
    if (data.labels.empty()) continue;
    baseline[std::string(to_string(task))] =
        majority_baseline(data.labels, class_count(classifier_task(task)))->label();
  }
  write_artifact(out("models/" + variant + "/baseline.json"), baseline.dump(2) + "\n");
  finish();
}

void Pipeline::predict(const json& args) {
  const std::string variant(to_string(config_.variant));
  const std::string strategy = args.value("strategy", std::string("all"));
  const std::string routing = args.value("routing", std::string("predicted"));
  if (routing != "predicted" && routing != "gold") fail(ErrorKind::invalid_argument, "routing must be predicted or gold");
  std::vector<std::string> strategies;
  if (strategy == "all") {
    strategies = {"baseline", "three_way", "two_stage"};
  } else if (strategy == "two_stage" || strategy == "three_way" || strategy == "baseline") {
    strategies = {strategy};
  } else {
    fail(ErrorKind::invalid_argument, "unknown strategy \"" + strategy + "\" (expected two_stage, three_way or baseline)");
  }

  const fs::path pairs_path = require("pairs.jsonl");
  const fs::path split_path = require("split.json");
  const auto test_pairs = select_pairs(read_pairs_file(pairs_path), read_split(split_path).test);
  std::vector<std::string> texts;
  std::vector<Outcome> gold;
  for (const auto& p : test_pairs) {
    texts.push_back(make_input(p, config_.variant, config_.separator));
    gold.push_back(p.outcome);
  }
  const std::string model_dir = "models/" + variant + "/";

  std::vector<fs::path> written;
  for (const std::string& s : strategies) {
    const std::string name = s == "two_stage" && routing == "gold" ? "two_stage_gold" : s;
    begin("predict_" + name + "_" + variant);
    record_input(pairs_path);
    record_input(split_path);

    std::vector<OutcomePrediction> predictions;
    if (s == "baseline") {
      const fs::path path = require(model_dir + "baseline.json");
      record_input(path);
      const json doc = read_json_file(path);
      if (!doc.contains("three_way")) fail(ErrorKind::inconsistency, path.string() + ": no three-way baseline");
      const int label = doc["three_way"].get<int>();
      const Decision d = Decision::one_hot(label, 3);
      predictions.assign(texts.size(), OutcomePrediction{outcome_from_index(label), d.scores, false});
    } else if (s == "three_way") {
      const fs::path path = require(model_dir + "three_way.json");
      record_input(path);
      const StageModel model = load_stage_model(path, config_.base_dir);
      predictions = chunked<OutcomePrediction>(texts.size(), config_.jobs, [&](std::size_t b, std::size_t e) {
        return predict_three_way_batch(*model, std::span<const std::string>(texts.data() + b, e - b));
      });
    } else {
      const fs::path p1 = require(model_dir + "reentry.json");
      const fs::path p2 = require(model_dir + "reentry_type.json");
      record_input(p1);
      record_input(p2);
      const StageModel stage1 = load_stage_model(p1, config_.base_dir);
      const StageModel stage2 = load_stage_model(p2, config_.base_dir);
      const CascadeRouting mode = routing == "gold" ? CascadeRouting::gold : CascadeRouting::predicted;
      predictions = chunked<OutcomePrediction>(texts.size(), config_.jobs, [&](std::size_t b, std::size_t e) {
        return predict_two_stage_batch(*stage1, *stage2, std::span<const std::string>(texts.data() + b, e - b), mode,
                                       std::span<const Outcome>(gold.data() + b, e - b));
      });
    }

    std::string contents;
    for (std::size_t i = 0; i < test_pairs.size(); ++i) {
      contents += json{{"pair_id", test_pairs[i].id()},
                       {"strategy", name},
                       {"variant", variant},
                       {"predicted", to_string(predictions[i].outcome)},
                       {"scores", predictions[i].scores}}
                      .dump();
      contents += '\n';
    }
    write_artifact(out("predictions/" + name + "_" + variant + ".jsonl"), contents);
    finish();
    written.insert(written.end(), outputs_.begin(), outputs_.end());
    outputs_.clear();
  }
  outputs_ = std::move(written);
}

namespace {

std::vector<fs::path> path_list(const json& args, const char* key) {
  std::vector<fs::path> out;
  if (!args.contains(key)) return out;
  const json& v = args[key];
  if (v.is_string()) {
    out.emplace_back(v.get<std::string>());
  } else if (v.is_array()) {
    for (const json& e : v) out.emplace_back(e.get<std::string>());
  } else {
    fail(ErrorKind::invalid_argument, std::string(key) + ": expected a path or a list of paths");
  }
  return out;
}

std::string stem_of(const fs::path& p) { return p.stem().string(); }

}  // namespace

void Pipeline::evaluate(const json& args) {
  const auto existing = [](const fs::path& p) {
    if (!fs::exists(p)) fail(ErrorKind::missing_input, "missing input " + p.string());
    return p;
  };
  const fs::path gold_path = args.contains("gold") ? existing(args["gold"].get<std::string>()) : require("pairs.jsonl");
  std::vector<fs::path> preds = path_list(args, "pred");
  if (preds.empty()) {
    const std::string suffix = "_" + std::string(to_string(config_.variant)) + ".jsonl";
    if (fs::is_directory(out("predictions"))) {
      for (const auto& entry : fs::directory_iterator(out("predictions"))) {
        const std::string name = entry.path().filename().string();
        if (name.size() > suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
          preds.push_back(entry.path());
        }
      }
    }
    if (preds.empty()) fail(ErrorKind::missing_input, "missing input " + out("predictions").string() + "/*" + suffix + " (run `predict` first)");
    std::sort(preds.begin(), preds.end());
  }
  for (const auto& p : preds) existing(p);
  const std::vector<fs::path> compares = path_list(args, "compare");
  for (const auto& p : compares) existing(p);

  begin("evaluate");
  record_input(gold_path);
  const auto gold = read_gold(gold_path);
  json doc{{"gold", manifest_key(gold_path, config_.output_dir, config_.base_dir)}, {"predictions", json::object()}};

  std::vector<std::string> row_names;
  std::vector<MetricsReport> three_way_reports, binary_reports;
  std::map<std::string, Joined> joined;
  for (const auto& p : preds) {
    record_input(p);
    Joined j = join(gold, read_predictions(p), p);
    const json result = evaluate_predictions(j);
    doc["predictions"][stem_of(p)] = result;
    row_names.push_back(stem_of(p));
    three_way_reports.push_back(prf(confusion(j.gold, j.predicted, kOutcomeNames)));
    joined.emplace(stem_of(p), std::move(j));
  }

  std::ostringstream md;
  md << "# Evaluation\n\n## Three-way outcome\n\n" << render_metrics_markdown(row_names, three_way_reports) << '\n';

  if (!compares.empty()) {
    json tests = json::array();
    md << "## McNemar\n\n| A | B | b | c | statistic | p | method |\n|---|---|---:|---:|---:|---:|---|\n";
    for (const auto& q : compares) {
      record_input(q);
      const Joined other = join(gold, read_predictions(q), q);
      std::map<std::string, int> other_pred;
      for (std::size_t i = 0; i < other.ids.size(); ++i) other_pred[other.ids[i]] = other.predicted[i];
      for (const auto& [name, j] : joined) {
        std::vector<int> g, a, b;
        for (std::size_t i = 0; i < j.ids.size(); ++i) {
          const auto it = other_pred.find(j.ids[i]);
          if (it == other_pred.end()) continue;
          g.push_back(j.gold[i]);
          a.push_back(j.predicted[i]);
          b.push_back(it->second);
        }
        const McNemarResult r = mcnemar(g, a, b);
        json row = to_json(r);
        row["a"] = name;
        row["b"] = stem_of(q);
        row["items"] = g.size();
        tests.push_back(row);
        md << "| " << name << " | " << stem_of(q) << " | " << r.b << " | " << r.c << " | "
           << format_fixed(r.statistic, 4) << " | " << format_fixed(r.p_value, 4) << " | " << r.method << " |\n";
      }
    }
    doc["mcnemar"] = tests;
    md << '\n';
  }

  if (args.contains("annotations")) {
    const fs::path path = existing(args["annotations"].get<std::string>());
    record_input(path);
    const auto rows = parse_annotation_csv(read_file(path));
    std::vector<std::string> a, b;
    for (const auto& r : rows) {
      a.push_back(r.label_a);
      b.push_back(r.label_b);
    }
    const KappaResult k = cohen_kappa(a, b);
    doc["kappa"] = to_json(k);
    md << "## Annotator agreement\n\nItems: " << k.items << ", observed agreement " << format_fixed(k.agreement)
       << ", Cohen's kappa " << format_fixed(k.kappa) << "\n\n";
  }

  if (args.contains("errors")) {
    const fs::path path = existing(args["errors"].get<std::string>());
    record_input(path);
    const ErrorReport report = error_report(parse_error_csv(read_file(path)), kOutcomeNames);
    doc["error_analysis"] = to_json(report);
    md << "## Error analysis\n\n" << render_error_report_markdown(report) << '\n';
  }

  write_artifact(out("evaluation.json"), doc.dump(2) + "\n");
  write_artifact(out("evaluation.md"), md.str());
  finish();
}

void Pipeline::compare(const json& args) {
  const fs::path gold_path = require("pairs.jsonl");
  std::vector<fs::path> preds = path_list(args, "pred");
  if (preds.empty() && fs::is_directory(out("predictions"))) {
    for (const auto& entry : fs::directory_iterator(out("predictions"))) {
      if (entry.path().extension() == ".jsonl") preds.push_back(entry.path());
    }
    std::sort(preds.begin(), preds.end());
  }
  if (preds.size() < 2) {
    fail(ErrorKind::missing_input, "compare needs at least two prediction files under " + out("predictions").string());
  }
  begin("compare");
  record_input(gold_path);
  const auto gold = read_gold(gold_path);
  std::vector<std::pair<std::string, std::map<std::string, int>>> runs;
  for (const auto& p : preds) {
    record_input(p);
    const Joined j = join(gold, read_predictions(p), p);
    std::map<std::string, int> by_id;
    for (std::size_t i = 0; i < j.ids.size(); ++i) by_id[j.ids[i]] = j.predicted[i];
    runs.emplace_back(stem_of(p), std::move(by_id));
  }

  std::ostringstream csv, md;
  csv << "a,b,items,b_count,c_count,statistic,p_value,method\n";
  md << "# Pairwise McNemar\n\n| A | B | items | b | c | statistic | p | method |\n"
     << "|---|---|---:|---:|---:|---:|---:|---|\n";
  for (std::size_t x = 0; x < runs.size(); ++x) {
    for (std::size_t y = x + 1; y < runs.size(); ++y) {
      std::vector<int> g, a, b;
      for (const auto& [id, pa] : runs[x].second) {
        const auto it = runs[y].second.find(id);
        if (it == runs[y].second.end()) continue;
        g.push_back(to_index(gold.at(id)));
        a.push_back(pa);
        b.push_back(it->second);
      }
      const McNemarResult r = mcnemar(g, a, b);
      csv << runs[x].first << ',' << runs[y].first << ',' << g.size() << ',' << r.b << ',' << r.c << ','
          << format_fixed(r.statistic, 6) << ',' << format_fixed(r.p_value, 6) << ',' << r.method << '\n';
      md << "| " << runs[x].first << " | " << runs[y].first << " | " << g.size() << " | " << r.b << " | " << r.c
         << " | " << format_fixed(r.statistic, 4) << " | " << format_fixed(r.p_value, 4) << " | " << r.method << " |\n";
    }
  }
  write_artifact(out("comparisons.csv"), csv.str());
  write_artifact(out("comparisons.md"), md.str());
  finish();
}

void Pipeline::report() {
  const fs::path dir = out("manifests");
  std::vector<fs::path> files;
  if (fs::is_directory(dir)) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.path().extension() == ".json" && entry.path().stem() != "report") files.push_back(entry.path());
    }
  }
  if (files.empty()) fail(ErrorKind::missing_input, "missing input " + dir.string() + " (no stage has run)");
  std::sort(files.begin(), files.end());

  begin("report");
  const std::string expected_hash = config_.hash();
  const auto resolve_key = [&](const std::string& key) {
    if (key.rfind("config:", 0) == 0) return config_.base_dir / key.substr(7);
    const fs::path p(key);
    return p.is_absolute() ? p : config_.output_dir / p;
  };
  std::vector<Manifest> manifests;
  for (const auto& f : files) {
    record_input(f);
    Manifest m = Manifest::from_json(read_json_file(f));
    if (!m.complete) fail(ErrorKind::inconsistency, "stage " + m.stage + " did not complete (" + f.string() + ")");
    if (m.config_hash != expected_hash) {
      fail(ErrorKind::inconsistency, "mixed manifests: " + f.string() + " was produced under a different config");
    }
    for (const auto* files_map : {&m.inputs, &m.outputs}) {
      for (const auto& [key, hash] : *files_map) {
        const fs::path p = resolve_key(key);
        if (!fs::exists(p) || file_sha256(p) != hash) {
          fail(ErrorKind::inconsistency, "mixed manifests: " + p.string() + " changed since stage " + m.stage + " ran");
        }
      }
    }
    manifests.push_back(std::move(m));
  }

  std::ostringstream md;
  md << "# Run report\n\nConfig hash `" << expected_hash << "`, seed " << config_.seed << ", version "
     << REENTRY_VERSION << ".\n\n## Stages\n\n| Stage | Inputs | Outputs |\n|---|---:|---:|\n";
  for (const auto& m : manifests) md << "| " << m.stage << " | " << m.inputs.size() << " | " << m.outputs.size() << " |\n";
  const std::pair<const char*, const char*> sections[] = {{"corpus_summary.md", "Corpus"},
                                                          {"linguistics_reentry.md", "Counterspeech: reentry vs none"},
                                                          {"linguistics_type.md", "Counterspeech: hateful vs non-hateful reentry"},
                                                          {"evaluation.md", "Prediction"},
                                                          {"comparisons.md", "Model comparison"}};
  for (const auto& [file, title] : sections) {
    const fs::path p = out(file);
    if (!fs::exists(p)) continue;
    md << "\n## " << title << "\n\n" << read_file(p);
  }
  write_artifact(out("report.md"), md.str());
  finish();
}

}  // namespace reentry
