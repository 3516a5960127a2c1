#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace reentry {

/// Rows are gold classes, columns predicted classes.
struct ConfusionMatrix {
  std::vector<std::string> classes;
  std::vector<std::vector<std::size_t>> counts;

  std::size_t total() const;
  std::size_t trace() const;
  std::size_t row_sum(std::size_t i) const;
  std::size_t col_sum(std::size_t j) const;
};

ConfusionMatrix confusion(std::span<const int> gold, std::span<const int> pred,
                          std::vector<std::string> classes);
ConfusionMatrix confusion(std::span<const std::string> gold, std::span<const std::string> pred,
                          std::vector<std::string> classes);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct MetricsReport {
  std::vector<std::string> classes;
  std::vector<ClassMetrics> per_class;
  ClassMetrics weighted;  // support-share weighted; support = total
  double accuracy = 0.0;
};

/// Zero denominators give 0 for P, R and F1.
MetricsReport prf(const ConfusionMatrix& matrix);

struct McNemarResult {
  std::size_t b = 0;  // A right, B wrong
  std::size_t c = 0;  // A wrong, B right
  double statistic = 0.0;
  double p_value = 1.0;
  std::string method;  // "exact" | "chi2_cc" | "degenerate"
};

inline constexpr std::size_t kMcNemarExactBelow = 25;

McNemarResult mcnemar(std::span<const int> gold, std::span<const int> pred_a,
                      std::span<const int> pred_b);
McNemarResult mcnemar_from_counts(std::size_t b, std::size_t c);

struct KappaResult {
  double agreement = 0.0;
  double kappa = 0.0;
  std::size_t items = 0;
};

KappaResult cohen_kappa(std::span<const std::string> labels_a,
                        std::span<const std::string> labels_b);

struct AnnotationRow {
  std::string item_id;
  std::string label_a;
  std::string label_b;
};

/// CSV (item_id,label_a,label_b); a header row is detected and skipped.
std::vector<AnnotationRow> parse_annotation_csv(std::string_view csv);

enum class ErrorCause {
  rhetorical_question,
  negation,
  sarcasm_irony,
  intricate_text,
  general_knowledge,
  other
};
enum class Polarity { fp, fn };

inline constexpr std::size_t kErrorCauseCount = 6;

std::string_view to_string(ErrorCause cause);
ErrorCause error_cause_from_string(std::string_view name);
std::string_view to_string(Polarity polarity);
Polarity polarity_from_string(std::string_view name);

struct ErrorRecord {
  std::string pair_id;
  std::string gold;
  std::string predicted;
  std::string cls;  // the class the polarity refers to
  Polarity polarity = Polarity::fp;
  ErrorCause cause = ErrorCause::other;
};

/// CSV (pair_id,gold,predicted,class,polarity,cause) with optional header.
std::vector<ErrorRecord> parse_error_csv(std::string_view csv);

struct ErrorColumn {
  std::string name;  // "<class> FP", "<class> FN" or "All"
  std::size_t records = 0;
  std::vector<double> proportions;  // per ErrorCause; empty when records == 0
};

struct ErrorReport {
  std::vector<ErrorColumn> columns;
};

/// Columns: each (class, polarity) seen in `class_order` order, then All.
/// Empty input yields an empty report.
ErrorReport error_report(std::span<const ErrorRecord> records,
                         std::span<const std::string> class_order = {});

/// Half away from zero; only used when rendering.
double round_half_away(double value, int decimals);
std::string format_fixed(double value, int decimals = 2);

nlohmann::json to_json(const ConfusionMatrix& matrix);
nlohmann::json to_json(const MetricsReport& report);
nlohmann::json to_json(const McNemarResult& result);
nlohmann::json to_json(const KappaResult& result);
nlohmann::json to_json(const ErrorReport& report);

/// "| Model | <class> P R F1 ... | Weighted P R F1 |" style row set.
std::string render_metrics_markdown(std::span<const std::string> row_names,
                                    std::span<const MetricsReport> reports);
std::string render_error_report_markdown(const ErrorReport& report);

}  // namespace reentry
