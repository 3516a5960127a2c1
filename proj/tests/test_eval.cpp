#include <random>

#include <gtest/gtest.h>

#include "metrics_oracle.hpp"
#include "reentry/error.hpp"
#include "reentry/eval.hpp"

using namespace reentry;

namespace {

std::vector<int> repeat(std::initializer_list<std::pair<int, int>> runs) {
  std::vector<int> v;
  for (const auto& [label, n] : runs) v.insert(v.end(), static_cast<std::size_t>(n), label);
  return v;
}

std::string row(const MetricsReport& r) {
  std::string s;
  for (const auto& m : r.per_class) {
    s += format_fixed(m.precision) + "/" + format_fixed(m.recall) + "/" + format_fixed(m.f1) + " ";
  }
  return s + format_fixed(r.weighted.precision) + "/" + format_fixed(r.weighted.recall) + "/" +
         format_fixed(r.weighted.f1);
}

}  // namespace

TEST(Confusion, SmallExample) {
  const std::vector<int> gold{0, 0, 0, 1, 1, 1}, pred{0, 0, 1, 1, 1, 1};
  const ConfusionMatrix m = confusion(gold, pred, {"a", "b"});
  EXPECT_EQ(m.counts, (std::vector<std::vector<std::size_t>>{{2, 1}, {0, 3}}));
  const MetricsReport r = prf(m);
  EXPECT_DOUBLE_EQ(r.per_class[0].precision, 1.0);
  EXPECT_DOUBLE_EQ(r.per_class[0].recall, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.per_class[1].precision, 0.75);
  EXPECT_DOUBLE_EQ(r.per_class[1].recall, 1.0);
  EXPECT_DOUBLE_EQ(r.accuracy, 5.0 / 6.0);
}

TEST(Confusion, StringLabelsAndErrors) {
  const std::vector<std::string> gold{"x", "y"}, pred{"y", "y"};
  EXPECT_EQ(confusion(gold, pred, {"x", "y"}).counts[0][1], 1u);
  EXPECT_THROW(confusion(gold, pred, {"x"}), Error);
  const std::vector<int> g{0}, p{0, 1};
  EXPECT_THROW(confusion(g, p, {"a", "b"}), Error);
}

TEST(Baselines, ConstantReentryPredictor) {
  const auto gold = repeat({{0, 694}, {1, 306}});
  const std::vector<int> pred(gold.size(), 0);
  EXPECT_EQ(row(prf(confusion(gold, pred, {"reentry", "no_reentry"}))),
            "0.69/1.00/0.82 0.00/0.00/0.00 0.48/0.69/0.57");
}

TEST(Baselines, ConstantNonHatefulPredictor) {
  const auto gold = repeat({{0, 200}, {1, 480}, {2, 320}});
  const std::vector<int> pred(gold.size(), 1);
  EXPECT_EQ(row(prf(confusion(gold, pred, {"hateful", "non_hateful", "no_reentry"}))),
            "0.00/0.00/0.00 0.48/1.00/0.65 0.00/0.00/0.00 0.23/0.48/0.31");
}

TEST(Metrics, RandomLabelingsMatchCountingOracle) {
  std::mt19937 rng(8);
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 2 + static_cast<int>(rng() % 3);
    const std::size_t n = 1 + rng() % 60;
    std::vector<int> gold(n), pred(n);
    for (std::size_t i = 0; i < n; ++i) {
      gold[i] = static_cast<int>(rng() % static_cast<unsigned>(k));
      pred[i] = static_cast<int>(rng() % static_cast<unsigned>(k));
    }
    std::vector<std::string> classes;
    for (int c = 0; c < k; ++c) classes.push_back("c" + std::to_string(c));
    const MetricsReport r = prf(confusion(gold, pred, classes));
    const auto want = testkit::count_metrics(gold, pred, k);
    for (int c = 0; c < k; ++c) {
      ASSERT_DOUBLE_EQ(r.per_class[static_cast<std::size_t>(c)].precision, want[static_cast<std::size_t>(c)].precision);
      ASSERT_DOUBLE_EQ(r.per_class[static_cast<std::size_t>(c)].recall, want[static_cast<std::size_t>(c)].recall);
      ASSERT_DOUBLE_EQ(r.per_class[static_cast<std::size_t>(c)].f1, want[static_cast<std::size_t>(c)].f1);
    }
    ASSERT_EQ(r.weighted.recall, r.accuracy);
  }
}

TEST(Metrics, EmptyPredictionColumnGivesZero) {
  const std::vector<int> gold{0, 1}, pred{0, 0};
  const MetricsReport r = prf(confusion(gold, pred, {"a", "b"}));
  EXPECT_EQ(r.per_class[1].precision, 0.0);
  EXPECT_EQ(r.per_class[1].f1, 0.0);
}

TEST(McNemar, ExactSmallCounts) {
  const McNemarResult r = mcnemar_from_counts(10, 2);
  EXPECT_EQ(r.method, "exact");
  EXPECT_NEAR(r.p_value, 158.0 / 4096.0, 1e-12);
  EXPECT_NEAR(r.p_value, 0.0386, 1e-4);
}

TEST(McNemar, ChiSquareWithContinuityCorrection) {
  const McNemarResult r = mcnemar_from_counts(30, 10);
  EXPECT_EQ(r.method, "chi2_cc");
  EXPECT_DOUBLE_EQ(r.statistic, 9.025);
  EXPECT_NEAR(r.p_value, std::erfc(std::sqrt(9.025 / 2.0)), 1e-15);
}

TEST(McNemar, SymmetricAndDegenerate) {
  for (std::size_t b = 0; b < 40; ++b) {
    for (std::size_t c = 0; c < 40; ++c) {
      ASSERT_DOUBLE_EQ(mcnemar_from_counts(b, c).p_value, mcnemar_from_counts(c, b).p_value);
    }
  }
  EXPECT_EQ(mcnemar_from_counts(0, 0).method, "degenerate");
  EXPECT_DOUBLE_EQ(mcnemar_from_counts(0, 0).p_value, 1.0);
  EXPECT_DOUBLE_EQ(mcnemar_from_counts(5, 5).p_value, 1.0);
}

TEST(McNemar, CountsDisagreementsFromPredictions) {
  const std::vector<int> gold{0, 0, 1, 1, 1}, a{0, 1, 1, 1, 0}, b{1, 1, 1, 0, 1};
  const McNemarResult r = mcnemar(gold, a, b);
  EXPECT_EQ(r.b, 2u);  // items 0 and 3
  EXPECT_EQ(r.c, 1u);  // item 4
}

TEST(Kappa, Examples) {
  std::vector<std::string> a, b;
  const auto add = [&](const char* x, const char* y, int n) {
    for (int i = 0; i < n; ++i) {
      a.push_back(x);
      b.push_back(y);
    }
  };
  add("yes", "yes", 40);
  add("yes", "no", 10);
  add("no", "yes", 10);
  add("no", "no", 40);
  EXPECT_NEAR(cohen_kappa(a, b).kappa, 0.6, 1e-9);
  EXPECT_DOUBLE_EQ(cohen_kappa(a, b).agreement, 0.8);

  std::vector<std::string> all_yes(10, "yes"), half;
  for (int i = 0; i < 10; ++i) half.push_back(i < 5 ? "yes" : "no");
  EXPECT_NEAR(cohen_kappa(all_yes, half).kappa, 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(cohen_kappa(all_yes, all_yes).kappa, 1.0);
  EXPECT_THROW(cohen_kappa({}, {}), Error);
}

TEST(Csv, Annotations) {
  const auto rows = parse_annotation_csv("item_id,label_a,label_b\n1, yes ,no\n\n\"2,b\",yes,yes\n");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].label_a, "yes");
  EXPECT_EQ(rows[1].item_id, "2,b");
  EXPECT_THROW(parse_annotation_csv("1,yes\n"), Error);
  EXPECT_THROW(parse_annotation_csv("1,\"yes,no\n"), Error);
}

TEST(Csv, ErrorRecords) {
  const auto rows = parse_error_csv(
      "pair_id,gold,predicted,class,polarity,cause\n"
      "a:b,hateful,no_reentry,hateful,FN,Sarcasm/Irony\n"
      "c:d,hateful,no_reentry,no_reentry,false positive,Rhetorical question\n");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].cause, ErrorCause::sarcasm_irony);
  EXPECT_EQ(rows[0].polarity, Polarity::fn);
  EXPECT_EQ(rows[1].polarity, Polarity::fp);
  EXPECT_EQ(rows[1].cause, ErrorCause::rhetorical_question);
  EXPECT_THROW(parse_error_csv("a,b,c,d,FP,telepathy\n"), Error);
}

TEST(ErrorReportTest, SingleRecord) {
  const std::vector<ErrorRecord> records{{"p", "hateful", "no_reentry", "hateful", Polarity::fn, ErrorCause::negation}};
  const std::vector<std::string> order{"non_hateful", "hateful", "no_reentry"};
  const ErrorReport r = error_report(records, order);
  ASSERT_EQ(r.columns.size(), 7u);
  EXPECT_EQ(r.columns[3].name, "hateful FN");
  EXPECT_EQ(r.columns[3].records, 1u);
  EXPECT_DOUBLE_EQ(r.columns[3].proportions[static_cast<std::size_t>(ErrorCause::negation)], 1.0);
  EXPECT_TRUE(r.columns[0].proportions.empty());
  EXPECT_EQ(r.columns.back().name, "All");
  const std::string md = render_error_report_markdown(r);
  EXPECT_NE(md.find("| Negation | - | - | - | 1.00 |"), std::string::npos);
}

TEST(ErrorReportTest, ProportionsAndEmptyInput) {
  std::vector<ErrorRecord> records;
  for (int i = 0; i < 100; ++i) {
    records.push_back({"p" + std::to_string(i), "a", "b", i % 2 ? "a" : "b", i % 3 ? Polarity::fp : Polarity::fn,
                       i < 49 ? ErrorCause::rhetorical_question : ErrorCause::intricate_text});
  }
  const ErrorReport r = error_report(records);
  ASSERT_EQ(r.columns.size(), 5u);  // a FP, a FN, b FP, b FN, All
  EXPECT_EQ(r.columns.back().records, 100u);
  EXPECT_DOUBLE_EQ(r.columns.back().proportions[0], 0.49);
  double sum = 0.0;
  for (double p : r.columns.back().proportions) sum += p;
  EXPECT_NEAR(sum, 1.0, 1e-12);
  EXPECT_TRUE(error_report({}).columns.empty());
}

TEST(Rounding, HalfAwayFromZero) {
  EXPECT_EQ(format_fixed(0.125), "0.13");
  EXPECT_EQ(format_fixed(0.115), "0.12");
  EXPECT_EQ(format_fixed(-0.125), "-0.13");
  EXPECT_EQ(format_fixed(0.694 * 0.694), "0.48");
  EXPECT_EQ(format_fixed(-0.001), "0.00");
  EXPECT_EQ(format_fixed(2.5, 0), "3");
}

TEST(Render, MetricsTableHasOneRowPerModel) {
  const std::vector<int> gold{0, 1}, pred{0, 1};
  const std::vector<MetricsReport> reports{prf(confusion(gold, pred, {"a", "b"}))};
  const std::vector<std::string> names{"m1"};
  const std::string md = render_metrics_markdown(names, reports);
  EXPECT_NE(md.find("| Model | a P | a R | a F1 | b P | b R | b F1 | Weighted P | Weighted R | Weighted F1 |"),
            std::string::npos);
  EXPECT_NE(md.find("| m1 | 1.00 | 1.00 | 1.00 |"), std::string::npos);
}
