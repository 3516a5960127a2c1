// Command-line front end. Talks to the toolkit only through the C API.
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "reentry/reentry.h"

namespace {

const std::vector<std::string> kCommands{"ingest", "label",   "extract",  "analyze", "split",
                                         "train",  "predict", "evaluate", "compare", "report"};

int report_failure(reentry_status status, const char* message) {
  std::cerr << "reentry: error: " << message << '\n';
  return reentry_exit_code(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hate-speech reentry toolkit"};
  app.set_version_flag("--version", std::string(reentry_version()));

  std::string command, config;
  std::optional<int> jobs;
  std::optional<std::uint64_t> seed;
  std::optional<double> ratio;
  std::optional<std::string> variant, out, strategy, routing, gold, annotations, errors;
  std::vector<std::string> pred, compare;
  bool strict = false, lenient = false, quiet = false;

  app.add_option("command", command, "Pipeline stage to run")->required()->check(CLI::IsMember(kCommands));
  app.add_option("-c,--config", config, "Run configuration (JSON)")->required();
  app.add_option("-j,--jobs", jobs, "Worker threads within a stage")->check(CLI::PositiveNumber);
  auto* strict_flag = app.add_flag("--strict", strict, "ingest: fail on the first malformed line");
  app.add_flag("--lenient", lenient, "ingest: collect malformed lines and continue")->excludes(strict_flag);
  app.add_option("--seed", seed, "Split seed");
  app.add_option("--ratio", ratio, "Training share of the split");
  app.add_option("--variant", variant, "Model input: hs, cs or pair");
  app.add_option("--strategy", strategy, "predict: two_stage, three_way or baseline (default: all)");
  app.add_option("--routing", routing, "predict: cascade routing, predicted (default) or gold");
  app.add_option("-o,--out", out, "Output directory (overrides the config)");
  app.add_option("--gold", gold, "evaluate: gold labels (JSONL with pair_id and outcome)");
  app.add_option("--pred", pred, "evaluate/compare: prediction files");
  app.add_option("--compare", compare, "evaluate: prediction files to test against --pred");
  app.add_option("--annotations", annotations, "evaluate: annotation CSV for Cohen's kappa");
  app.add_option("--errors", errors, "evaluate: error-analysis CSV");
  app.add_flag("-q,--quiet", quiet, "Do not list written artifacts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  nlohmann::json overrides = nlohmann::json::object();
  if (jobs) overrides["jobs"] = *jobs;
  if (seed) overrides["seed"] = *seed;
  if (ratio) overrides["ratio"] = *ratio;
  if (variant) overrides["variant"] = *variant;
  if (out) overrides["out"] = *out;
  if (strict) overrides["mode"] = "strict";
  if (lenient) overrides["mode"] = "lenient";

  nlohmann::json args = nlohmann::json::object();
  if (strategy) args["strategy"] = *strategy;
  if (routing) args["routing"] = *routing;
  if (gold) args["gold"] = *gold;
  if (!pred.empty()) args["pred"] = pred;
  if (!compare.empty()) args["compare"] = compare;
  if (annotations) args["annotations"] = *annotations;
  if (errors) args["errors"] = *errors;

  reentry_pipeline* pipeline = nullptr;
  reentry_status status = reentry_pipeline_open(config.c_str(), overrides.dump().c_str(), &pipeline);
  if (status != REENTRY_OK) return report_failure(status, reentry_last_error());

  status = reentry_pipeline_run(pipeline, command.c_str(), args.dump().c_str());
  if (status != REENTRY_OK) {
    const int code = report_failure(status, reentry_pipeline_last_error(pipeline));
    reentry_pipeline_close(pipeline);
    return code;
  }
  if (!quiet) {
    char* listing = nullptr;
    if (reentry_pipeline_outputs(pipeline, &listing) == REENTRY_OK) {
      std::fputs(listing, stdout);
      reentry_string_free(listing);
    }
  }
  reentry_pipeline_close(pipeline);
  return 0;
}
