#include "reentry/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "reentry/error.hpp"

namespace reentry {

std::size_t ConfusionMatrix::total() const {
  std::size_t t = 0;
  for (const auto& row : counts) {
    for (const std::size_t c : row) t += c;
  }
  return t;
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t t = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) t += counts[i][i];
  return t;
}

std::size_t ConfusionMatrix::row_sum(std::size_t i) const {
  std::size_t t = 0;
  for (const std::size_t c : counts.at(i)) t += c;
  return t;
}

std::size_t ConfusionMatrix::col_sum(std::size_t j) const {
  std::size_t t = 0;
  for (const auto& row : counts) t += row.at(j);
  return t;
}

ConfusionMatrix confusion(std::span<const int> gold, std::span<const int> pred,
                          std::vector<std::string> classes) {
  if (gold.size() != pred.size()) {
    fail(ErrorKind::invalid_argument, "gold and predicted label counts differ (" + std::to_string(gold.size()) +
                                          " vs " + std::to_string(pred.size()) + ")");
  }
  const int k = static_cast<int>(classes.size());
  ConfusionMatrix m{std::move(classes), {}};
  m.counts.assign(static_cast<std::size_t>(k), std::vector<std::size_t>(static_cast<std::size_t>(k), 0));
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] < 0 || gold[i] >= k || pred[i] < 0 || pred[i] >= k) {
      fail(ErrorKind::invalid_argument, "label out of range at item " + std::to_string(i));
    }
    ++m.counts[static_cast<std::size_t>(gold[i])][static_cast<std::size_t>(pred[i])];
  }
  return m;
}

ConfusionMatrix confusion(std::span<const std::string> gold, std::span<const std::string> pred,
                          std::vector<std::string> classes) {
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < classes.size(); ++i) index.emplace(classes[i], static_cast<int>(i));
  const auto lookup = [&](const std::string& label) {
    const auto it = index.find(label);
    if (it == index.end()) fail(ErrorKind::invalid_argument, "unknown class label \"" + label + "\"");
    return it->second;
  };
  std::vector<int> g, p;
  for (const auto& s : gold) g.push_back(lookup(s));
  for (const auto& s : pred) p.push_back(lookup(s));
  return confusion(g, p, std::move(classes));
}

MetricsReport prf(const ConfusionMatrix& matrix) {
  MetricsReport report;
  report.classes = matrix.classes;
  const std::size_t total = matrix.total();
  double weighted_p = 0.0, weighted_f = 0.0;
  for (std::size_t i = 0; i < matrix.classes.size(); ++i) {
    const double tp = static_cast<double>(matrix.counts[i][i]);
    const std::size_t predicted = matrix.col_sum(i);
    const std::size_t support = matrix.row_sum(i);
    ClassMetrics m;
    m.support = support;
    m.precision = predicted == 0 ? 0.0 : tp / static_cast<double>(predicted);
    m.recall = support == 0 ? 0.0 : tp / static_cast<double>(support);
    m.f1 = m.precision + m.recall == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    if (total > 0) {
      const double w = static_cast<double>(support) / static_cast<double>(total);
      weighted_p += w * m.precision;
      weighted_f += w * m.f1;
    }
    report.per_class.push_back(m);
  }
  report.weighted.support = total;
  report.weighted.precision = weighted_p;
  report.weighted.f1 = weighted_f;
  // Support-weighted recall collapses to trace / total; compute it that way
  // so it equals accuracy exactly.
  report.accuracy = total == 0 ? 0.0 : static_cast<double>(matrix.trace()) / static_cast<double>(total);
  report.weighted.recall = report.accuracy;
  return report;
}

// ---------------------------------------------------------------------------

McNemarResult mcnemar_from_counts(std::size_t b, std::size_t c) {
  McNemarResult r;
  r.b = b;
  r.c = c;
  const std::size_t n = b + c;
  if (n == 0) {
    r.method = "degenerate";
    return r;
  }
  const double diff = std::max(std::abs(static_cast<double>(b) - static_cast<double>(c)) - 1.0, 0.0);
  r.statistic = diff * diff / static_cast<double>(n);
  if (n < kMcNemarExactBelow) {
    // Two-sided exact binomial with p = 1/2.
    const std::size_t k = std::min(b, c);
    long double tail = 0.0L, term = 1.0L;  // C(n, 0)
    for (std::size_t i = 0; i <= k; ++i) {
      if (i > 0) term = term * static_cast<long double>(n - i + 1) / static_cast<long double>(i);
      tail += term;
    }
    tail = std::ldexp(tail, -static_cast<int>(n));
    r.p_value = static_cast<double>(std::min(1.0L, 2.0L * tail));
    r.method = "exact";
  } else {
    r.p_value = std::erfc(std::sqrt(r.statistic / 2.0));
    r.method = "chi2_cc";
  }
  return r;
}

McNemarResult mcnemar(std::span<const int> gold, std::span<const int> pred_a, std::span<const int> pred_b) {
  if (gold.size() != pred_a.size() || gold.size() != pred_b.size()) {
    fail(ErrorKind::invalid_argument, "McNemar inputs differ in length");
  }
  std::size_t b = 0, c = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool a_ok = pred_a[i] == gold[i];
    const bool b_ok = pred_b[i] == gold[i];
    if (a_ok && !b_ok) ++b;
    if (!a_ok && b_ok) ++c;
  }
  return mcnemar_from_counts(b, c);
}

KappaResult cohen_kappa(std::span<const std::string> labels_a, std::span<const std::string> labels_b) {
  if (labels_a.size() != labels_b.size()) fail(ErrorKind::invalid_argument, "annotator label counts differ");
  if (labels_a.empty()) fail(ErrorKind::invalid_argument, "kappa needs at least one item");
  std::map<std::string, std::pair<std::size_t, std::size_t>> marginals;
  std::size_t agree = 0;
  for (std::size_t i = 0; i < labels_a.size(); ++i) {
    ++marginals[labels_a[i]].first;
    ++marginals[labels_b[i]].second;
    if (labels_a[i] == labels_b[i]) ++agree;
  }
  const double n = static_cast<double>(labels_a.size());
  double expected = 0.0;
  for (const auto& [label, m] : marginals) {
    expected += (static_cast<double>(m.first) / n) * (static_cast<double>(m.second) / n);
  }
  KappaResult r;
  r.items = labels_a.size();
  r.agreement = static_cast<double>(agree) / n;
  if (expected >= 1.0) {
    r.kappa = agree == labels_a.size() ? 1.0 : 0.0;
  } else {
    r.kappa = (r.agreement - expected) / (1.0 - expected);
  }
  return r;
}

// ---------------------------------------------------------------------------
// CSV input

namespace {

std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        fields.back() += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.emplace_back();
    } else {
      fields.back() += ch;
    }
  }
  if (quoted) fail(ErrorKind::parse, "line " + std::to_string(line_no) + ": unterminated quote");
  for (auto& f : fields) {
    const auto first = f.find_first_not_of(" \t");
    const auto last = f.find_last_not_of(" \t");
    f = first == std::string::npos ? std::string() : f.substr(first, last - first + 1);
  }
  return fields;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

template <typename Row>
std::vector<Row> parse_rows(std::string_view csv, std::size_t width, std::string_view header_key,
                            Row (*make)(const std::vector<std::string>&, std::size_t)) {
  std::vector<Row> rows;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool first = true;
  while (pos <= csv.size()) {
    const std::size_t end = std::min(csv.find('\n', pos), csv.size());
    std::string_view line = csv.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) {
      if (end == csv.size()) break;
      continue;
    }
    const auto fields = split_csv_line(line, line_no);
    if (first && lower(fields[0]) == header_key) {
      first = false;
      continue;
    }
    first = false;
    if (fields.size() != width) {
      fail(ErrorKind::parse, "line " + std::to_string(line_no) + ": expected " + std::to_string(width) +
                                 " fields, found " + std::to_string(fields.size()));
    }
    rows.push_back(make(fields, line_no));
    if (end == csv.size()) break;
  }
  return rows;
}

std::string normalise_name(std::string_view name) {
  std::string out;
  for (const char ch : name) {
    const auto u = static_cast<unsigned char>(ch);
    if (std::isalnum(u)) {
      out += static_cast<char>(std::tolower(u));
    } else if (!out.empty() && out.back() != '_') {
      out += '_';
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

constexpr std::array<std::string_view, kErrorCauseCount> kCauseNames{
    "rhetorical_question", "negation", "sarcasm_irony", "intricate_text", "general_knowledge", "other"};
constexpr std::array<std::string_view, kErrorCauseCount> kCauseTitles{
    "Rhetorical question", "Negation", "Sarcasm/Irony", "Intricate text", "General knowledge", "Other"};

}  // namespace

std::vector<AnnotationRow> parse_annotation_csv(std::string_view csv) {
  return parse_rows<AnnotationRow>(csv, 3, "item_id", [](const std::vector<std::string>& f, std::size_t) {
    return AnnotationRow{f[0], f[1], f[2]};
  });
}

std::string_view to_string(ErrorCause cause) { return kCauseNames[static_cast<std::size_t>(cause)]; }

ErrorCause error_cause_from_string(std::string_view name) {
  const std::string key = normalise_name(name);
  for (std::size_t i = 0; i < kCauseNames.size(); ++i) {
    if (key == kCauseNames[i]) return static_cast<ErrorCause>(i);
  }
  fail(ErrorKind::parse, "unknown error cause \"" + std::string(name) + "\"");
}

std::string_view to_string(Polarity polarity) { return polarity == Polarity::fp ? "FP" : "FN"; }

Polarity polarity_from_string(std::string_view name) {
  const std::string key = normalise_name(name);
  if (key == "fp" || key == "false_positive") return Polarity::fp;
  if (key == "fn" || key == "false_negative") return Polarity::fn;
  fail(ErrorKind::parse, "unknown polarity \"" + std::string(name) + "\"");
}

std::vector<ErrorRecord> parse_error_csv(std::string_view csv) {
  return parse_rows<ErrorRecord>(csv, 6, "pair_id", [](const std::vector<std::string>& f, std::size_t line) {
    try {
      return ErrorRecord{f[0], f[1], f[2], f[3], polarity_from_string(f[4]), error_cause_from_string(f[5])};
    } catch (const Error& e) {
      fail(ErrorKind::parse, "line " + std::to_string(line) + ": " + e.what());
    }
  });
}

ErrorReport error_report(std::span<const ErrorRecord> records, std::span<const std::string> class_order) {
  ErrorReport report;
  if (records.empty()) return report;

  std::vector<std::string> classes(class_order.begin(), class_order.end());
  std::set<std::string> extra;
  for (const auto& r : records) {
    if (std::find(classes.begin(), classes.end(), r.cls) == classes.end()) extra.insert(r.cls);
  }
  classes.insert(classes.end(), extra.begin(), extra.end());

  const auto column = [&](std::string name, auto keep) {
    ErrorColumn col;
    col.name = std::move(name);
    std::array<std::size_t, kErrorCauseCount> counts{};
    for (const auto& r : records) {
      if (!keep(r)) continue;
      ++col.records;
      ++counts[static_cast<std::size_t>(r.cause)];
    }
    if (col.records > 0) {
      for (const std::size_t c : counts) {
        col.proportions.push_back(static_cast<double>(c) / static_cast<double>(col.records));
      }
    }
    return col;
  };

  for (const auto& cls : classes) {
    for (const Polarity pol : {Polarity::fp, Polarity::fn}) {
      ErrorColumn col = column(cls + " " + std::string(to_string(pol)),
                               [&](const ErrorRecord& r) { return r.cls == cls && r.polarity == pol; });
      report.columns.push_back(std::move(col));
    }
  }
  report.columns.push_back(column("All", [](const ErrorRecord&) { return true; }));
  return report;
}

// ---------------------------------------------------------------------------
// Rendering

double round_half_away(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  const double scaled = std::abs(value) * scale;
  // The nudge keeps values such as 0.125 (stored just below) on the upper side.
  const double rounded = std::floor(scaled + 0.5 + 1e-9);
  const double result = std::copysign(rounded / scale, value);
  return result == 0.0 ? 0.0 : result;
}

std::string format_fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, round_half_away(value, decimals));
  return buf;
}

nlohmann::json to_json(const ConfusionMatrix& matrix) {
  return {{"classes", matrix.classes}, {"counts", matrix.counts}};
}

namespace {

nlohmann::json metrics_json(const ClassMetrics& m) {
  return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}};
}

}  // namespace

nlohmann::json to_json(const MetricsReport& report) {
  nlohmann::json per_class = nlohmann::json::object();
  for (std::size_t i = 0; i < report.classes.size(); ++i) {
    per_class[report.classes[i]] = metrics_json(report.per_class[i]);
  }
  return {{"classes", report.classes},
          {"per_class", per_class},
          {"weighted", metrics_json(report.weighted)},
          {"accuracy", report.accuracy}};
}

nlohmann::json to_json(const McNemarResult& result) {
  return {{"b", result.b},
          {"c", result.c},
          {"statistic", result.statistic},
          {"p_value", result.p_value},
          {"method", result.method}};
}

nlohmann::json to_json(const KappaResult& result) {
  return {{"items", result.items}, {"agreement", result.agreement}, {"kappa", result.kappa}};
}

nlohmann::json to_json(const ErrorReport& report) {
  nlohmann::json columns = nlohmann::json::array();
  for (const auto& col : report.columns) {
    nlohmann::json props = nlohmann::json::object();
    for (std::size_t i = 0; i < col.proportions.size(); ++i) props[std::string(kCauseNames[i])] = col.proportions[i];
    columns.push_back({{"name", col.name}, {"records", col.records}, {"proportions", props}});
  }
  return {{"columns", columns}};
}

std::string render_metrics_markdown(std::span<const std::string> row_names, std::span<const MetricsReport> reports) {
  if (row_names.size() != reports.size()) fail(ErrorKind::invalid_argument, "one row name per report expected");
  std::ostringstream out;
  if (reports.empty()) return out.str();
  const auto& classes = reports.front().classes;
  out << "| Model |";
  for (const auto& c : classes) out << ' ' << c << " P | " << c << " R | " << c << " F1 |";
  out << " Weighted P | Weighted R | Weighted F1 |\n|---|";
  for (std::size_t i = 0; i < 3 * (classes.size() + 1); ++i) out << "---:|";
  out << '\n';
  for (std::size_t r = 0; r < reports.size(); ++r) {
    out << "| " << row_names[r] << " |";
    const auto cell = [&](const ClassMetrics& m) {
      out << ' ' << format_fixed(m.precision) << " | " << format_fixed(m.recall) << " | " << format_fixed(m.f1)
          << " |";
    };
    for (const auto& m : reports[r].per_class) cell(m);
    cell(reports[r].weighted);
    out << '\n';
  }
  return out.str();
}

std::string render_error_report_markdown(const ErrorReport& report) {
  std::ostringstream out;
  if (report.columns.empty()) return "No error records.\n";
  out << "| Cause |";
  for (const auto& col : report.columns) out << ' ' << col.name << " |";
  out << "\n|---|";
  for (std::size_t i = 0; i < report.columns.size(); ++i) out << "---:|";
  out << '\n';
  for (std::size_t k = 0; k < kErrorCauseCount; ++k) {
    out << "| " << kCauseTitles[k] << " |";
    for (const auto& col : report.columns) {
      out << ' ' << (col.proportions.empty() ? std::string("-") : format_fixed(col.proportions[k])) << " |";
    }
    out << '\n';
  }
  out << "| Records |";
  for (const auto& col : report.columns) out << ' ' << col.records << " |";
  out << '\n';
  return out.str();
}

}  // namespace reentry
