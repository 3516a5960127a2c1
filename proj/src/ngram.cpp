#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "reentry/classify.hpp"
#include "reentry/error.hpp"
#include "reentry/text.hpp"
#include "shuffle.hpp"

namespace reentry {

using nlohmann::json;

namespace {

std::vector<double> softmax(std::vector<double> logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& v : logits) {
    v = std::exp(v - top);
    sum += v;
  }
  for (double& v : logits) v /= sum;
  return logits;
}

}  // namespace

NgramHyper NgramHyper::from_json(const json& doc) {
  NgramHyper h;
  if (!doc.is_object()) fail(ErrorKind::config, "hyper: expected an object");
  if (doc.contains("orders")) h.orders = doc["orders"].get<std::vector<int>>();
  h.dimension = doc.value("dimension", h.dimension);
  h.l2 = doc.value("l2", h.l2);
  h.epochs = doc.value("epochs", h.epochs);
  h.learning_rate = doc.value("learning_rate", h.learning_rate);
  h.seed = doc.value("seed", h.seed);
  h.num_classes = doc.value("num_classes", h.num_classes);
  if (h.orders.empty() || std::any_of(h.orders.begin(), h.orders.end(), [](int o) { return o < 1; })) {
    fail(ErrorKind::config, "hyper.orders: need one or more positive n-gram orders");
  }
  if (h.dimension == 0) fail(ErrorKind::config, "hyper.dimension: must be positive");
  if (h.epochs < 1) fail(ErrorKind::config, "hyper.epochs: must be at least 1");
  if (!(h.learning_rate > 0.0)) fail(ErrorKind::config, "hyper.learning_rate: must be positive");
  if (h.l2 < 0.0) fail(ErrorKind::config, "hyper.l2: must be non-negative");
  if (h.num_classes < 0) fail(ErrorKind::config, "hyper.num_classes: must be non-negative");
  return h;
}

json NgramHyper::to_json() const {
  return json{{"orders", orders},   {"dimension", dimension},
              {"l2", l2},           {"epochs", epochs},
              {"learning_rate", learning_rate}, {"seed", seed},
              {"num_classes", num_classes}};
}

std::vector<std::pair<std::size_t, double>> ngram_features(std::string_view text,
                                                           const std::vector<int>& orders,
                                                           std::size_t dimension) {
  const std::vector<std::string> tokens = tokenize(text);
  std::set<std::size_t> buckets;
  for (const int n : orders) {
    if (tokens.size() < static_cast<std::size_t>(n)) continue;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
      std::string gram = std::to_string(n);
      for (int k = 0; k < n; ++k) {
        gram += '\x1f';
        gram += tokens[i + static_cast<std::size_t>(k)];
      }
      buckets.insert(static_cast<std::size_t>(fnv1a64(gram) % dimension));
    }
  }
  std::vector<std::pair<std::size_t, double>> features;
  if (buckets.empty()) return features;
  const double value = 1.0 / std::sqrt(static_cast<double>(buckets.size()));
  features.reserve(buckets.size());
  for (const std::size_t b : buckets) features.emplace_back(b, value);
  return features;
}

Decision NgramModel::predict(std::string_view text) const {
  if (constant_) return Decision::one_hot(*constant_, num_classes_);
  std::vector<double> logits(bias_);
  for (const auto& [j, x] : ngram_features(text, orders_, dimension_)) {
    for (int k = 0; k < num_classes_; ++k) {
      logits[static_cast<std::size_t>(k)] += weights_[static_cast<std::size_t>(k) * dimension_ + j] * x;
    }
  }
  return Decision::from_scores(softmax(std::move(logits)));
}

Decision predict_ngram(const NgramModel& model, std::string_view text) { return model.predict(text); }

NgramModel train_ngram(std::span<const std::string> texts, std::span<const int> labels,
                       const NgramHyper& hyper) {
  if (texts.empty()) fail(ErrorKind::invalid_argument, "empty training set");
  if (texts.size() != labels.size()) {
    fail(ErrorKind::invalid_argument, "texts and labels differ in length");
  }
  if (std::any_of(labels.begin(), labels.end(), [](int l) { return l < 0; })) {
    fail(ErrorKind::invalid_argument, "negative class label");
  }
  const int largest = *std::max_element(labels.begin(), labels.end());
  const int classes = hyper.num_classes > 0 ? hyper.num_classes : std::max(largest + 1, 2);
  if (largest >= classes) fail(ErrorKind::invalid_argument, "label outside num_classes");

  NgramModel model;
  model.num_classes_ = classes;
  model.dimension_ = hyper.dimension;
  model.orders_ = hyper.orders;

  if (std::set<int>(labels.begin(), labels.end()).size() == 1) {
    model.constant_ = labels.front();
    return model;
  }

  const std::size_t d = hyper.dimension;
  const std::size_t k_count = static_cast<std::size_t>(classes);
  model.weights_.assign(k_count * d, 0.0);
  model.bias_.assign(k_count, 0.0);

  std::vector<std::vector<std::pair<std::size_t, double>>> features;
  features.reserve(texts.size());
  for (const auto& t : texts) features.push_back(ngram_features(t, hyper.orders, d));

  std::mt19937_64 rng(hyper.seed);
  std::vector<std::size_t> order(texts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<double> logits(k_count);
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    detail::seeded_shuffle(order, rng);
    const double eta = hyper.learning_rate / (1.0 + 0.5 * epoch);
    for (const std::size_t i : order) {
      const auto& x = features[i];
      for (std::size_t k = 0; k < k_count; ++k) {
        double z = model.bias_[k];
        for (const auto& [j, v] : x) z += model.weights_[k * d + j] * v;
        logits[k] = z;
      }
      const std::vector<double> p = softmax(logits);
      for (std::size_t k = 0; k < k_count; ++k) {
        const double g = p[k] - (static_cast<std::size_t>(labels[i]) == k ? 1.0 : 0.0);
        model.bias_[k] -= eta * g;
        for (const auto& [j, v] : x) {
          double& w = model.weights_[k * d + j];
          w -= eta * (g * v + hyper.l2 * w);
        }
      }
    }
  }
  return model;
}

json NgramModel::to_json() const {
  json doc{{"format", "hashed-ngram-softmax/1"},
           {"classes", num_classes_},
           {"dimension", dimension_},
           {"orders", orders_}};
  if (constant_) {
    doc["constant"] = *constant_;
    return doc;
  }
  doc["bias"] = bias_;
  // Sparse rows: [bucket, w_0, ..., w_{K-1}] for buckets with any weight.
  json rows = json::array();
  for (std::size_t j = 0; j < dimension_; ++j) {
    bool any = false;
    for (int k = 0; k < num_classes_; ++k) {
      any = any || weights_[static_cast<std::size_t>(k) * dimension_ + j] != 0.0;
    }
    if (!any) continue;
    json row = json::array({j});
    for (int k = 0; k < num_classes_; ++k) row.push_back(weights_[static_cast<std::size_t>(k) * dimension_ + j]);
    rows.push_back(std::move(row));
  }
  doc["weights"] = std::move(rows);
  return doc;
}

NgramModel NgramModel::from_json(const json& doc) {
  if (!doc.is_object() || doc.value("format", std::string()) != "hashed-ngram-softmax/1") {
    fail(ErrorKind::parse, "not a hashed n-gram model document");
  }
  NgramModel m;
  m.num_classes_ = doc.at("classes").get<int>();
  m.dimension_ = doc.at("dimension").get<std::size_t>();
  m.orders_ = doc.at("orders").get<std::vector<int>>();
  if (m.num_classes_ < 2 || m.dimension_ == 0 || m.orders_.empty()) {
    fail(ErrorKind::parse, "model header is invalid");
  }
  if (doc.contains("constant")) {
    m.constant_ = doc["constant"].get<int>();
    if (*m.constant_ < 0 || *m.constant_ >= m.num_classes_) fail(ErrorKind::parse, "constant label out of range");
    return m;
  }
  m.bias_ = doc.at("bias").get<std::vector<double>>();
  if (m.bias_.size() != static_cast<std::size_t>(m.num_classes_)) fail(ErrorKind::parse, "bias size mismatch");
  m.weights_.assign(static_cast<std::size_t>(m.num_classes_) * m.dimension_, 0.0);
  for (const json& row : doc.at("weights")) {
    if (!row.is_array() || row.size() != static_cast<std::size_t>(m.num_classes_) + 1) {
      fail(ErrorKind::parse, "weight row has the wrong width");
    }
    const auto j = row[0].get<std::size_t>();
    if (j >= m.dimension_) fail(ErrorKind::parse, "weight bucket out of range");
    for (int k = 0; k < m.num_classes_; ++k) {
      m.weights_[static_cast<std::size_t>(k) * m.dimension_ + j] = row[static_cast<std::size_t>(k) + 1].get<double>();
    }
  }
  return m;
}

}  // namespace reentry
