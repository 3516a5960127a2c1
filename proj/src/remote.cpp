#include <algorithm>
#include <cmath>
#include <future>

#include <httplib.h>

#include "reentry/classify.hpp"
#include "reentry/error.hpp"

namespace reentry {

using nlohmann::json;

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path prefix without trailing slash
};

Endpoint split_endpoint(const std::string& url) {
  constexpr std::string_view scheme = "http://";
  if (url.rfind(scheme, 0) != 0) fail(ErrorKind::config, "endpoint must start with http://: " + url);
  const auto slash = url.find('/', scheme.size());
  Endpoint e;
  e.origin = url.substr(0, slash);
  if (slash != std::string::npos) {
    e.prefix = url.substr(slash);
    while (!e.prefix.empty() && e.prefix.back() == '/') e.prefix.pop_back();
  }
  if (e.origin.size() == scheme.size()) fail(ErrorKind::config, "endpoint has no host: " + url);
  return e;
}

bool transient_status(int status) { return status == 429 || status >= 500; }

std::vector<Decision> decode(const std::string& body, Task task, std::size_t expected) {
  const json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) fail(ErrorKind::protocol, "response is not a JSON object");
  if (!doc.contains("labels") || !doc["labels"].is_array()) {
    fail(ErrorKind::protocol, "response has no labels array");
  }
  const json& labels = doc["labels"];
  if (labels.size() != expected) {
    fail(ErrorKind::protocol, "response carries " + std::to_string(labels.size()) +
                                  " labels for " + std::to_string(expected) + " texts");
  }
  const int classes = class_count(task);
  const json* scores = nullptr;
  if (const auto it = doc.find("scores"); it != doc.end() && !it->is_null()) {
    if (!it->is_array() || it->size() != expected) {
      fail(ErrorKind::protocol, "scores length does not match the request");
    }
    scores = &*it;
  }
  std::vector<Decision> out;
  out.reserve(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    if (!labels[i].is_number_integer()) fail(ErrorKind::protocol, "label is not an integer");
    const int label = labels[i].get<int>();
    if (label < 0 || label >= classes) {
      fail(ErrorKind::protocol, "label " + std::to_string(label) + " outside the task's classes");
    }
    if (!scores) {
      out.push_back(Decision::one_hot(label, classes));
      continue;
    }
    const json& row = (*scores)[i];
    if (!row.is_array() || row.size() != static_cast<std::size_t>(classes)) {
      fail(ErrorKind::protocol, "score row has the wrong width");
    }
    std::vector<double> s;
    double sum = 0.0;
    for (const json& v : row) {
      if (!v.is_number()) fail(ErrorKind::protocol, "score is not a number");
      const double x = v.get<double>();
      if (!(x >= 0.0 && x <= 1.0)) fail(ErrorKind::protocol, "score outside [0, 1]");
      s.push_back(x);
      sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-6) fail(ErrorKind::protocol, "score row does not sum to 1");
    Decision d = Decision::from_scores(std::move(s));
    if (d.label != label) fail(ErrorKind::protocol, "label disagrees with its scores");
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<Decision> post_batch(const RemoteOptions& options, const Endpoint& endpoint, Task task,
                                 std::span<const std::string> texts) {
  const std::string payload =
      json{{"task", to_string(task)}, {"texts", std::vector<std::string>(texts.begin(), texts.end())}}.dump();
  const auto seconds = options.timeout.count() / 1000;
  const auto micros = (options.timeout.count() % 1000) * 1000;
  const int attempts = 1 + std::max(0, options.retries);
  std::string last_error;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    httplib::Client client(endpoint.origin);
    client.set_connection_timeout(seconds, micros);
    client.set_read_timeout(seconds, micros);
    client.set_write_timeout(seconds, micros);
    const auto res = client.Post(endpoint.prefix + "/v1/classify", payload, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status == 200) return decode(res->body, task, texts.size());
    if (transient_status(res->status)) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    std::string detail = res->body;
    const json err = json::parse(res->body, nullptr, false);
    if (!err.is_discarded() && err.is_object() && err.contains("error") && err["error"].is_string()) {
      detail = err["error"].get<std::string>();
    }
    fail(ErrorKind::protocol, "HTTP " + std::to_string(res->status) + " from " + endpoint.origin + ": " + detail);
  }
  fail(ErrorKind::transport, "classification request to " + endpoint.origin + " failed after " +
                                 std::to_string(attempts) + " attempts: " + last_error);
}

}  // namespace

std::vector<Decision> remote_classify(const RemoteOptions& options, Task task,
                                      std::span<const std::string> texts) {
  if (texts.empty()) fail(ErrorKind::invalid_argument, "remote_classify needs at least one text");
  if (options.max_batch == 0) fail(ErrorKind::config, "max_batch must be at least 1");
  if (options.timeout.count() <= 0) fail(ErrorKind::config, "timeout must be positive");
  const Endpoint endpoint = split_endpoint(options.endpoint);

  std::vector<std::span<const std::string>> chunks;
  for (std::size_t at = 0; at < texts.size(); at += options.max_batch) {
    chunks.push_back(texts.subspan(at, std::min(options.max_batch, texts.size() - at)));
  }
  const std::size_t in_flight = std::max<std::size_t>(1, options.max_in_flight);

  std::vector<Decision> out;
  out.reserve(texts.size());
  for (std::size_t wave = 0; wave < chunks.size(); wave += in_flight) {
    const std::size_t end = std::min(chunks.size(), wave + in_flight);
    if (end - wave == 1) {
      auto part = post_batch(options, endpoint, task, chunks[wave]);
      out.insert(out.end(), part.begin(), part.end());
      continue;
    }
    std::vector<std::future<std::vector<Decision>>> pending;
    for (std::size_t c = wave; c < end; ++c) {
      pending.push_back(std::async(std::launch::async, post_batch, std::cref(options),
                                   std::cref(endpoint), task, chunks[c]));
    }
    for (auto& f : pending) {
      auto part = f.get();
      out.insert(out.end(), part.begin(), part.end());
    }
  }
  return out;
}

}  // namespace reentry
