#include "reentry/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "reentry/error.hpp"
#include "shuffle.hpp"

namespace reentry {

std::string_view to_string(InputVariant variant) {
  switch (variant) {
    case InputVariant::hs_only: return "hs";
    case InputVariant::counter_only: return "cs";
    case InputVariant::pair: return "pair";
  }
  return "pair";
}

InputVariant variant_from_string(std::string_view name) {
  if (name == "hs") return InputVariant::hs_only;
  if (name == "cs") return InputVariant::counter_only;
  if (name == "pair") return InputVariant::pair;
  fail(ErrorKind::config, "unknown input variant \"" + std::string(name) + "\" (expected hs, cs or pair)");
}

std::string make_input(const ConversationPair& pair, InputVariant variant, std::string_view separator) {
  const bool need_hs = variant != InputVariant::counter_only;
  const bool need_cs = variant != InputVariant::hs_only;
  if (need_hs && pair.hs.body.empty()) fail(ErrorKind::invalid_argument, "pair " + pair.id() + ": empty hate-speech text");
  if (need_cs && pair.cs.body.empty()) fail(ErrorKind::invalid_argument, "pair " + pair.id() + ": empty counterspeech text");
  switch (variant) {
    case InputVariant::hs_only: return pair.hs.body;
    case InputVariant::counter_only: return pair.cs.body;
    case InputVariant::pair: break;
  }
  std::string text = pair.hs.body;
  text += ' ';
  text += separator;
  text += ' ';
  text += pair.cs.body;
  return text;
}

// ---------------------------------------------------------------------------

namespace {

void check_ratio(double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) fail(ErrorKind::invalid_argument, "split ratio must lie in (0, 1)");
}

void check_unique(const std::vector<std::string>& sorted) {
  const auto dup = std::adjacent_find(sorted.begin(), sorted.end());
  if (dup != sorted.end()) fail(ErrorKind::invalid_argument, "duplicate id in split input: " + *dup);
}

std::size_t train_size(std::size_t n, double ratio) {
  return static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
}

}  // namespace

SplitAssignment split_corpus(std::vector<std::string> ids, double ratio, std::uint64_t seed) {
  check_ratio(ratio);
  if (ids.size() < 2) fail(ErrorKind::invalid_argument, "split needs at least 2 items");
  std::sort(ids.begin(), ids.end());
  check_unique(ids);
  std::mt19937_64 rng(seed);
  detail::seeded_shuffle(ids, rng);
  // Both sides stay non-empty even when rounding would empty one.
  const std::size_t n_train = std::clamp<std::size_t>(train_size(ids.size(), ratio), 1, ids.size() - 1);

  SplitAssignment split;
  split.seed = seed;
  split.ratio = ratio;
  split.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train), ids.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

SplitAssignment split_corpus_stratified(std::span<const std::string> ids, std::span<const int> labels, double ratio,
                                        std::uint64_t seed) {
  check_ratio(ratio);
  if (ids.size() != labels.size()) fail(ErrorKind::invalid_argument, "one label per id expected");
  if (ids.size() < 2) fail(ErrorKind::invalid_argument, "split needs at least 2 items");
  std::vector<std::string> all(ids.begin(), ids.end());
  std::sort(all.begin(), all.end());
  check_unique(all);

  std::map<int, std::vector<std::string>> strata;
  for (std::size_t i = 0; i < ids.size(); ++i) strata[labels[i]].push_back(ids[i]);

  SplitAssignment split;
  split.seed = seed;
  split.ratio = ratio;
  std::mt19937_64 rng(seed);
  for (auto& [label, members] : strata) {
    std::sort(members.begin(), members.end());
    detail::seeded_shuffle(members, rng);
    const std::size_t n_train = std::min(train_size(members.size(), ratio), members.size());
    split.train.insert(split.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.test.insert(split.test.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train), members.end());
  }
  if (split.train.empty() || split.test.empty()) {
    fail(ErrorKind::invalid_argument, "stratified split left one side empty");
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

// ---------------------------------------------------------------------------

std::string_view to_string(StageTask task) {
  switch (task) {
    case StageTask::reentry: return "reentry";
    case StageTask::reentry_type: return "reentry_type";
    case StageTask::three_way: return "three_way";
  }
  return "three_way";
}

Task classifier_task(StageTask task) {
  switch (task) {
    case StageTask::reentry: return Task::reentry;
    case StageTask::reentry_type: return Task::reentry_type;
    case StageTask::three_way: return Task::three_way;
  }
  return Task::three_way;
}

std::optional<int> stage_label(Outcome outcome, StageTask task) {
  switch (task) {
    case StageTask::reentry: return outcome == Outcome::no_reentry ? 0 : 1;
    case StageTask::reentry_type:
      if (outcome == Outcome::no_reentry) return std::nullopt;
      return outcome == Outcome::hateful ? 1 : 0;
    case StageTask::three_way: return to_index(outcome);
  }
  return std::nullopt;
}

StageData stage_data(std::span<const ConversationPair> pairs, StageTask task, InputVariant variant,
                     std::string_view separator) {
  StageData data;
  for (const auto& p : pairs) {
    const auto label = stage_label(p.outcome, task);
    if (!label) continue;
    data.texts.push_back(make_input(p, variant, separator));
    data.labels.push_back(*label);
  }
  return data;
}

StageModel train_stage(StageTask task, std::span<const ConversationPair> train_pairs, InputVariant variant,
                       const ClassifierSpec& spec, const std::filesystem::path& base_dir,
                       std::string_view separator) {
  const int classes = class_count(classifier_task(task));
  if (spec.kind != ClassifierKind::ngram) {
    ClassifierSpec adapted = spec;
    adapted.task = classifier_task(task);
    adapted.validate();
    std::shared_ptr<const Classifier> model = make_classifier(adapted, base_dir);
    if (model->num_classes() != classes) {
      fail(ErrorKind::config, std::string(to_string(spec.kind)) + " classifier cannot serve the " +
                                  std::string(to_string(task)) + " task");
    }
    return model;
  }

  const StageData data = stage_data(train_pairs, task, variant, separator);
  if (data.texts.empty()) {
    fail(ErrorKind::invalid_argument, "no training items for the " + std::string(to_string(task)) + " task");
  }
  NgramHyper hyper = NgramHyper::from_json(spec.parameters.value("hyper", nlohmann::json::object()));
  hyper.num_classes = classes;
  return std::make_shared<NgramClassifier>(train_ngram(data.texts, data.labels, hyper));
}

std::shared_ptr<const ConstantClassifier> majority_baseline(std::span<const int> labels, int num_classes) {
  if (labels.empty()) fail(ErrorKind::invalid_argument, "majority baseline needs at least one label");
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (const int l : labels) {
    if (l < 0 || l >= num_classes) fail(ErrorKind::invalid_argument, "label out of range for the baseline");
    ++counts[static_cast<std::size_t>(l)];
  }
  // max_element keeps the first maximum, i.e. the lowest class index.
  const auto best = std::max_element(counts.begin(), counts.end()) - counts.begin();
  return std::make_shared<ConstantClassifier>(static_cast<int>(best), num_classes);
}

// ---------------------------------------------------------------------------

Outcome compose_two_stage(const Decision& stage1, const std::optional<Decision>& stage2) {
  if (stage1.label != kPositive) return Outcome::no_reentry;
  if (!stage2) fail(ErrorKind::internal, "cascade reached stage 2 without a stage-2 decision");
  return stage2->label == kPositive ? Outcome::hateful : Outcome::non_hateful;
}

Outcome predict_two_stage(const Classifier& stage1, const Classifier& stage2, const std::string& text) {
  const Decision first = stage1.classify_one(text);
  if (first.label != kPositive) return Outcome::no_reentry;
  return compose_two_stage(first, stage2.classify_one(text));
}

Outcome predict_three_way(const Classifier& model, const std::string& text) {
  return outcome_from_index(model.classify_one(text).label);
}

namespace {

void check_binary(const Classifier& model, const char* role) {
  if (model.num_classes() != 2) fail(ErrorKind::invalid_argument, std::string(role) + " must be a binary classifier");
}

}  // namespace

std::vector<OutcomePrediction> predict_two_stage_batch(const Classifier& stage1, const Classifier& stage2,
                                                       std::span<const std::string> texts, CascadeRouting routing,
                                                       std::span<const Outcome> gold) {
  check_binary(stage1, "stage 1");
  check_binary(stage2, "stage 2");
  if (routing == CascadeRouting::gold && gold.size() != texts.size()) {
    fail(ErrorKind::invalid_argument, "gold routing needs one gold outcome per text");
  }

  std::vector<Decision> first;
  if (routing == CascadeRouting::predicted) {
    first = stage1.classify(texts);
  } else {
    // Diagnostic: a perfect stage 1, so stage 2 is measured on true reentries.
    for (const Outcome o : gold) first.push_back(Decision::one_hot(o == Outcome::no_reentry ? 0 : 1, 2));
  }

  std::vector<std::string> routed_texts;
  std::vector<std::size_t> routed_index;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (first[i].label == kPositive) {
      routed_texts.push_back(texts[i]);
      routed_index.push_back(i);
    }
  }
  const std::vector<Decision> second =
      routed_texts.empty() ? std::vector<Decision>{} : stage2.classify(routed_texts);

  std::vector<OutcomePrediction> out(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const auto& s1 = first[i].scores;
    out[i].outcome = Outcome::no_reentry;
    out[i].scores = {s1[0], s1[1] / 2.0, s1[1] / 2.0};
  }
  for (std::size_t k = 0; k < routed_index.size(); ++k) {
    auto& o = out[routed_index[k]];
    const auto& s1 = first[routed_index[k]].scores;
    const auto& s2 = second[k].scores;
    o.routed_to_stage2 = true;
    o.outcome = compose_two_stage(first[routed_index[k]], second[k]);
    o.scores = {s1[0], s1[1] * s2[1], s1[1] * s2[0]};
  }
  return out;
}

std::vector<OutcomePrediction> predict_three_way_batch(const Classifier& model, std::span<const std::string> texts) {
  if (model.num_classes() != 3) fail(ErrorKind::invalid_argument, "three-way prediction needs a 3-class model");
  std::vector<OutcomePrediction> out;
  out.reserve(texts.size());
  for (auto& d : model.classify(texts)) out.push_back({outcome_from_index(d.label), std::move(d.scores), false});
  return out;
}

}  // namespace reentry
