#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "reentry/classify.hpp"
#include "reentry/outcomes.hpp"

namespace reentry {

enum class InputVariant { hs_only, counter_only, pair };

std::string_view to_string(InputVariant variant);  // "hs" | "cs" | "pair"
InputVariant variant_from_string(std::string_view name);

inline constexpr std::string_view kDefaultSeparator = "[SEP]";

std::string make_input(const ConversationPair& pair, InputVariant variant,
                       std::string_view separator = kDefaultSeparator);

struct SplitAssignment {
  std::vector<std::string> train;  // sorted
  std::vector<std::string> test;   // sorted
  std::uint64_t seed = 0;
  double ratio = 0.8;
};

/// Ids are sorted before a seeded shuffle, so input order is irrelevant.
SplitAssignment split_corpus(std::vector<std::string> ids, double ratio, std::uint64_t seed);

/// Same procedure applied within each label stratum.
SplitAssignment split_corpus_stratified(std::span<const std::string> ids,
                                        std::span<const int> labels, double ratio,
                                        std::uint64_t seed);

enum class StageTask { reentry, reentry_type, three_way };

std::string_view to_string(StageTask task);
Task classifier_task(StageTask task);

/// Class index of an outcome for a task; nullopt when the task does not use
/// the item (NoReentry under reentry_type).
///   reentry:      NoReentry -> 0, any reentry -> 1
///   reentry_type: NonHateful -> 0, Hateful -> 1
///   three_way:    Outcome index
std::optional<int> stage_label(Outcome outcome, StageTask task);

struct StageData {
  std::vector<std::string> texts;
  std::vector<int> labels;
};

StageData stage_data(std::span<const ConversationPair> pairs, StageTask task, InputVariant variant,
                     std::string_view separator = kDefaultSeparator);

using StageModel = std::shared_ptr<const Classifier>;

/// Trains an n-gram model for the task; remote specs are returned as
/// adapters since those models are trained elsewhere.
StageModel train_stage(StageTask task, std::span<const ConversationPair> train_pairs,
                       InputVariant variant, const ClassifierSpec& spec,
                       const std::filesystem::path& base_dir = {},
                       std::string_view separator = kDefaultSeparator);

/// Most frequent label; ties go to the lower class index.
std::shared_ptr<const ConstantClassifier> majority_baseline(std::span<const int> labels,
                                                            int num_classes);

struct OutcomePrediction {
  Outcome outcome = Outcome::no_reentry;
  std::vector<double> scores;  // over the three outcomes
  bool routed_to_stage2 = false;
};

/// Stage 1 says no -> NoReentry without consulting stage 2.
Outcome compose_two_stage(const Decision& stage1, const std::optional<Decision>& stage2);

Outcome predict_two_stage(const Classifier& stage1, const Classifier& stage2,
                          const std::string& text);
Outcome predict_three_way(const Classifier& model, const std::string& text);

enum class CascadeRouting { predicted, gold };

/// Batch cascade. Under gold routing (diagnostic) stage 2 sees exactly the
/// items whose gold outcome is a reentry; `gold` must then be given.
std::vector<OutcomePrediction> predict_two_stage_batch(
    const Classifier& stage1, const Classifier& stage2, std::span<const std::string> texts,
    CascadeRouting routing = CascadeRouting::predicted, std::span<const Outcome> gold = {});

std::vector<OutcomePrediction> predict_three_way_batch(const Classifier& model,
                                                       std::span<const std::string> texts);

}  // namespace reentry
