#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "reentry/lexicon.hpp"

namespace reentry {

enum class Task { hate, counter, reentry, reentry_type, three_way };

std::string_view to_string(Task task);
Task task_from_string(std::string_view name);
int class_count(Task task);

/// A single classification. `scores` is a probability vector and `label`
/// its argmax, ties going to the lowest index.
struct Decision {
  int label = 0;
  std::vector<double> scores;

  static Decision from_scores(std::vector<double> scores);
  static Decision one_hot(int label, int classes);

  bool operator==(const Decision&) const = default;
};

/// Index of the positive class for the binary detection tasks.
inline constexpr int kPositive = 1;

Decision classify_lexicon(std::string_view text, const Lexicon& lexicon, double threshold);

// ---------------------------------------------------------------------------
// Hashed n-gram softmax regression

struct NgramHyper {
  std::vector<int> orders{1, 2};
  std::size_t dimension = std::size_t{1} << 18;
  double l2 = 1e-6;
  int epochs = 8;
  double learning_rate = 0.5;
  std::uint64_t seed = 1;
  int num_classes = 0;  // 0: one more than the largest training label

  static NgramHyper from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

class NgramModel {
 public:
  int num_classes() const { return num_classes_; }
  std::size_t dimension() const { return dimension_; }
  const std::vector<int>& orders() const { return orders_; }
  std::optional<int> constant_label() const { return constant_; }
  const std::vector<double>& weights() const { return weights_; }  // class-major
  const std::vector<double>& bias() const { return bias_; }

  Decision predict(std::string_view text) const;

  nlohmann::json to_json() const;
  static NgramModel from_json(const nlohmann::json& doc);

  bool operator==(const NgramModel&) const = default;

 private:
  friend NgramModel train_ngram(std::span<const std::string>, std::span<const int>,
                                const NgramHyper&);

  int num_classes_ = 0;
  std::size_t dimension_ = 0;
  std::vector<int> orders_;
  std::optional<int> constant_;
  std::vector<double> weights_;
  std::vector<double> bias_;
};

/// Sparse, L2-normalised binary feature vector: (bucket, value) sorted by bucket.
std::vector<std::pair<std::size_t, double>> ngram_features(std::string_view text,
                                                           const std::vector<int>& orders,
                                                           std::size_t dimension);

/// Deterministic for a fixed seed. Empty input throws; single-class input
/// yields a constant predictor (check constant_label()).
NgramModel train_ngram(std::span<const std::string> texts, std::span<const int> labels,
                       const NgramHyper& hyper);
Decision predict_ngram(const NgramModel& model, std::string_view text);

// ---------------------------------------------------------------------------
// Remote adapter (wire protocol served by the model server)

struct RemoteOptions {
  std::string endpoint;  // http://host:port[/prefix]
  std::chrono::milliseconds timeout{10000};
  int retries = 2;
  std::size_t max_batch = 64;
  std::size_t max_in_flight = 4;
};

/// One Decision per text, order preserved. Texts beyond max_batch are sent as
/// several requests. Transport failures are retried; malformed or
/// length-mismatched responses throw ErrorKind::protocol immediately.
std::vector<Decision> remote_classify(const RemoteOptions& options, Task task,
                                      std::span<const std::string> texts);

// ---------------------------------------------------------------------------
// Uniform classifier surface

class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual int num_classes() const = 0;
  virtual std::vector<Decision> classify(std::span<const std::string> texts) const = 0;
  Decision classify_one(const std::string& text) const;
};

enum class ClassifierKind { lexicon, ngram, remote, constant };

std::string_view to_string(ClassifierKind kind);

struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::lexicon;
  Task task = Task::hate;
  nlohmann::json parameters = nlohmann::json::object();

  /// Throws ErrorKind::config naming the offending field.
  void validate() const;
  static ClassifierSpec from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

class LexiconClassifier final : public Classifier {
 public:
  LexiconClassifier(Lexicon lexicon, double threshold);
  int num_classes() const override { return 2; }
  std::vector<Decision> classify(std::span<const std::string> texts) const override;

 private:
  Lexicon lexicon_;
  double threshold_;
};

class NgramClassifier final : public Classifier {
 public:
  explicit NgramClassifier(NgramModel model) : model_(std::move(model)) {}
  int num_classes() const override { return model_.num_classes(); }
  std::vector<Decision> classify(std::span<const std::string> texts) const override;
  const NgramModel& model() const { return model_; }

 private:
  NgramModel model_;
};

class RemoteClassifier final : public Classifier {
 public:
  RemoteClassifier(RemoteOptions options, Task task);
  int num_classes() const override { return class_count(task_); }
  std::vector<Decision> classify(std::span<const std::string> texts) const override;

 private:
  RemoteOptions options_;
  Task task_;
};

class ConstantClassifier final : public Classifier {
 public:
  ConstantClassifier(int label, int classes);
  int num_classes() const override { return classes_; }
  int label() const { return label_; }
  std::vector<Decision> classify(std::span<const std::string> texts) const override;

 private:
  int label_;
  int classes_;
};

/// Builds a ready-to-use classifier. Relative paths in the parameters resolve
/// against `base_dir`. An ngram spec must name a trained model file.
std::unique_ptr<Classifier> make_classifier(const ClassifierSpec& spec,
                                            const std::filesystem::path& base_dir);

/// Positive iff every member voted the positive class. Empty input throws.
bool ensemble_consensus(std::span<const Decision> decisions);

class Ensemble {
 public:
  explicit Ensemble(std::vector<std::unique_ptr<Classifier>> members);

  std::size_t size() const { return members_.size(); }

  /// Per-text consensus; `votes`, when given, receives members' labels
  /// (votes[text][member]).
  std::vector<bool> label(std::span<const std::string> texts,
                          std::vector<std::vector<int>>* votes = nullptr) const;

 private:
  std::vector<std::unique_ptr<Classifier>> members_;
};

}  // namespace reentry
