#include "reentry/reentry.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <string>
#include <vector>

#include <json.hpp>

#include "reentry/eval.hpp"
#include "reentry/linguistics.hpp"
#include "reentry/pipeline.hpp"
#include "reentry/synth.hpp"
#include "reentry/text.hpp"

struct reentry_pipeline {
  reentry::Pipeline pipeline;
  std::string last_error;
};

namespace {

thread_local std::string g_last_error;

reentry_status status_for(reentry::ErrorKind kind) {
  using reentry::ErrorKind;
  switch (kind) {
    case ErrorKind::missing_input: return REENTRY_MISSING_INPUT;
    case ErrorKind::config: return REENTRY_BAD_CONFIG;
    case ErrorKind::protocol:
    case ErrorKind::transport: return REENTRY_REMOTE_FAILURE;
    case ErrorKind::invalid_argument: return REENTRY_INVALID_ARGUMENT;
    case ErrorKind::parse: return REENTRY_PARSE_ERROR;
    case ErrorKind::io: return REENTRY_IO_ERROR;
    case ErrorKind::inconsistency: return REENTRY_INCONSISTENT;
    case ErrorKind::internal: return REENTRY_ERROR;
  }
  return REENTRY_ERROR;
}

// Runs `body`, converting any exception into a status and message.
template <typename F>
reentry_status guarded(F&& body, std::string* sink = nullptr) {
  const auto record = [&](reentry_status status, const std::string& message) {
    g_last_error = message;
    if (sink) *sink = message;
    return status;
  };
  try {
    body();
    g_last_error.clear();
    if (sink) sink->clear();
    return REENTRY_OK;
  } catch (const reentry::Error& e) {
    return record(status_for(e.kind()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return record(REENTRY_PARSE_ERROR, e.what());
  } catch (const std::bad_alloc&) {
    return record(REENTRY_ERROR, "out of memory");
  } catch (const std::exception& e) {
    return record(REENTRY_ERROR, e.what());
  } catch (...) {
    return record(REENTRY_ERROR, "unknown error");
  }
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void need(const void* p, const char* what) {
  if (!p) reentry::fail(reentry::ErrorKind::invalid_argument, std::string(what) + " must not be NULL");
}

nlohmann::json parse_optional_json(const char* text, const char* what) {
  if (!text || !*text) return nlohmann::json::object();
  nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    reentry::fail(reentry::ErrorKind::invalid_argument, std::string(what) + " is not a JSON object");
  }
  return doc;
}

}  // namespace

extern "C" {

const char* reentry_version(void) { return REENTRY_VERSION; }

const char* reentry_last_error(void) { return g_last_error.c_str(); }

void reentry_string_free(char* s) { std::free(s); }

int reentry_exit_code(reentry_status status) {
  switch (status) {
    case REENTRY_OK: return 0;
    case REENTRY_MISSING_INPUT: return 2;
    case REENTRY_BAD_CONFIG: return 3;
    case REENTRY_REMOTE_FAILURE: return 4;
    default: return 1;
  }
}

reentry_status reentry_pipeline_open(const char* config_path, const char* overrides_json, reentry_pipeline** out) {
  return guarded([&] {
    need(config_path, "config_path");
    need(out, "out");
    *out = nullptr;
    const std::filesystem::path path(config_path);
    std::ifstream in(path);
    if (!in) reentry::fail(reentry::ErrorKind::config, "cannot open config " + path.string());
    const nlohmann::json raw = nlohmann::json::parse(in, nullptr, false);
    if (raw.is_discarded()) reentry::fail(reentry::ErrorKind::config, "config " + path.string() + ": malformed JSON");
    const nlohmann::json doc = reentry::apply_overrides(raw, parse_optional_json(overrides_json, "overrides"));
    auto config = reentry::RunConfig::from_json(doc, std::filesystem::absolute(path).parent_path());
    *out = new reentry_pipeline{reentry::Pipeline(std::move(config)), {}};
  });
}

reentry_status reentry_pipeline_run(reentry_pipeline* pipeline, const char* command, const char* args_json) {
  std::string* sink = pipeline ? &pipeline->last_error : nullptr;
  return guarded(
      [&] {
        need(pipeline, "pipeline");
        need(command, "command");
        pipeline->pipeline.run(reentry::command_from_string(command), parse_optional_json(args_json, "args"));
      },
      sink);
}

reentry_status reentry_pipeline_outputs(const reentry_pipeline* pipeline, char** out) {
  return guarded([&] {
    need(pipeline, "pipeline");
    need(out, "out");
    std::string joined;
    for (const auto& p : pipeline->pipeline.last_outputs()) {
      joined += p.string();
      joined += '\n';
    }
    *out = copy_string(joined);
  });
}

const char* reentry_pipeline_last_error(const reentry_pipeline* pipeline) {
  return pipeline ? pipeline->last_error.c_str() : "pipeline is NULL";
}

void reentry_pipeline_close(reentry_pipeline* pipeline) { delete pipeline; }

reentry_status reentry_synth_write(const char* dir, size_t pairs, uint64_t seed, double signal) {
  return guarded([&] {
    need(dir, "dir");
    reentry::SynthOptions options;
    options.pairs = pairs;
    options.seed = seed;
    options.signal = signal;
    reentry::write_synthetic_bundle(dir, options);
  });
}

reentry_status reentry_mask_pii(const char* text, char** out) {
  return guarded([&] {
    need(text, "text");
    need(out, "out");
    *out = copy_string(reentry::mask_pii(text));
  });
}

reentry_status reentry_rank_sum(const double* a, size_t n_a, const double* b, size_t n_b,
                                reentry_rank_sum_result* out) {
  return guarded([&] {
    need(out, "out");
    if (n_a > 0) need(a, "a");
    if (n_b > 0) need(b, "b");
    const auto r = reentry::wilcoxon_rank_sum(std::span<const double>(a, n_a), std::span<const double>(b, n_b));
    *out = {r.u_a, r.u_b, r.z, r.p, r.exact ? 1 : 0};
  });
}

reentry_status reentry_bonferroni(const double* p_values, size_t n, double alpha, long family_size, int* flags_out) {
  return guarded([&] {
    if (n > 0) {
      need(p_values, "p_values");
      need(flags_out, "flags_out");
    }
    const auto flags = reentry::bonferroni(std::span<const double>(p_values, n), alpha, family_size);
    for (std::size_t i = 0; i < n; ++i) flags_out[i] = flags[i] ? 1 : 0;
  });
}

reentry_status reentry_mcnemar(const int* gold, const int* pred_a, const int* pred_b, size_t n,
                               reentry_mcnemar_result* out) {
  return guarded([&] {
    need(out, "out");
    if (n > 0) {
      need(gold, "gold");
      need(pred_a, "pred_a");
      need(pred_b, "pred_b");
    }
    const auto r = reentry::mcnemar(std::span<const int>(gold, n), std::span<const int>(pred_a, n),
                                    std::span<const int>(pred_b, n));
    *out = {r.b, r.c, r.statistic, r.p_value, r.method == "exact" ? 1 : r.method == "degenerate" ? -1 : 0};
  });
}

reentry_status reentry_cohen_kappa(const char* const* labels_a, const char* const* labels_b, size_t n,
                                   double* agreement, double* kappa) {
  return guarded([&] {
    need(labels_a, "labels_a");
    need(labels_b, "labels_b");
    std::vector<std::string> a, b;
    for (std::size_t i = 0; i < n; ++i) {
      need(labels_a[i], "labels_a[i]");
      need(labels_b[i], "labels_b[i]");
      a.emplace_back(labels_a[i]);
      b.emplace_back(labels_b[i]);
    }
    const auto r = reentry::cohen_kappa(a, b);
    if (agreement) *agreement = r.agreement;
    if (kappa) *kappa = r.kappa;
  });
}

reentry_status reentry_prf(const size_t* counts, size_t k, double* per_class_out, double* weighted_out) {
  return guarded([&] {
    if (k == 0) reentry::fail(reentry::ErrorKind::invalid_argument, "k must be positive");
    need(counts, "counts");
    reentry::ConfusionMatrix m;
    for (std::size_t i = 0; i < k; ++i) {
      m.classes.push_back(std::to_string(i));
      m.counts.emplace_back(counts + i * k, counts + (i + 1) * k);
    }
    const auto report = reentry::prf(m);
    if (per_class_out) {
      for (std::size_t i = 0; i < k; ++i) {
        per_class_out[3 * i] = report.per_class[i].precision;
        per_class_out[3 * i + 1] = report.per_class[i].recall;
        per_class_out[3 * i + 2] = report.per_class[i].f1;
      }
    }
    if (weighted_out) {
      weighted_out[0] = report.weighted.precision;
      weighted_out[1] = report.weighted.recall;
      weighted_out[2] = report.weighted.f1;
    }
  });
}

}  // extern "C"
