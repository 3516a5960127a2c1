#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "rank_oracle.hpp"
#include "reentry/error.hpp"
#include "reentry/linguistics.hpp"

using namespace reentry;

namespace {

Lexicon lex(std::string name, std::vector<std::string> entries) {
  std::sort(entries.begin(), entries.end());
  return Lexicon{std::move(name), MatchMode::exact, std::move(entries)};
}

std::vector<double> sample(std::mt19937_64& rng, std::size_t n, bool tied) {
  std::vector<double> v(n);
  for (auto& x : v) {
    x = tied ? static_cast<double>(rng() % 4) : std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  }
  return v;
}

ConversationPair pair_with(Outcome outcome, Community community, std::string cs_text) {
  ConversationPair p;
  p.outcome = outcome;
  p.community = community;
  p.cs.body = std::move(cs_text);
  return p;
}

}  // namespace

TEST(Profile, ShareOfMatchedTokens) {
  const std::vector<Lexicon> lexicons{lex("negative", {"bad", "awful"}), lex("positive", {"good"})};
  const LexiconProfile p = profile_text("this is bad, really bad", lexicons);
  EXPECT_EQ(p.token_count, 5u);
  EXPECT_DOUBLE_EQ(p.scores[0], 0.4);
  EXPECT_DOUBLE_EQ(p.scores[1], 0.0);
  EXPECT_FALSE(p.degenerate);
}

TEST(Profile, EmptyTextIsDegenerate) {
  const std::vector<Lexicon> lexicons{lex("negative", {"bad"})};
  const LexiconProfile p = profile_text("  ... ", lexicons);
  EXPECT_TRUE(p.degenerate);
  EXPECT_EQ(p.scores, std::vector<double>{0.0});
}

TEST(Profile, DuplicatingTextKeepsScores) {
  const std::vector<Lexicon> lexicons{lex("negative", {"bad"}), lex("other", {"is"})};
  const auto once = profile_text("this is bad", lexicons);
  const auto twice = profile_text("this is bad this is bad", lexicons);
  EXPECT_EQ(once.scores, twice.scores);
}

TEST(RankSum, IdenticalSamples) {
  const std::vector<double> a{1, 2, 3};
  const RankSumResult r = wilcoxon_rank_sum(a, a);
  EXPECT_DOUBLE_EQ(r.u_a, 4.5);
  EXPECT_DOUBLE_EQ(r.z, 0.0);
  EXPECT_DOUBLE_EQ(r.p, 1.0);
  EXPECT_TRUE(r.exact);
}

TEST(RankSum, CompleteSeparation) {
  const std::vector<double> a{1, 2, 3}, b{4, 5, 6};
  const RankSumResult r = wilcoxon_rank_sum(a, b);
  EXPECT_DOUBLE_EQ(r.u_a, 0.0);
  EXPECT_DOUBLE_EQ(r.u_b, 9.0);
  EXPECT_NEAR(r.p, 0.1, 1e-12);
  EXPECT_LT(r.z, 0.0);
}

TEST(RankSum, AllTiedGivesOne) {
  const std::vector<double> a(5, 0.0), b(12, 0.0);
  const RankSumResult r = wilcoxon_rank_sum(a, b);
  EXPECT_DOUBLE_EQ(r.p, 1.0);
  const std::vector<double> c(10, 0.0), d(12, 0.0);
  EXPECT_DOUBLE_EQ(wilcoxon_rank_sum(c, d).p, 1.0);
}

TEST(RankSum, ExactPathMatchesPermutationOracle) {
  std::mt19937_64 rng(11);
  for (std::size_t n1 = 1; n1 <= 6; ++n1) {
    for (std::size_t n2 = 1; n2 <= 6; ++n2) {
      for (int trial = 0; trial < 20; ++trial) {
        const auto a = sample(rng, n1, trial % 2 == 0);
        const auto b = sample(rng, n2, trial % 2 == 0);
        const RankSumResult r = wilcoxon_rank_sum(a, b);
        ASSERT_TRUE(r.exact);
        ASSERT_NEAR(r.p, testkit::permutation_p(a, b), 1e-12) << n1 << "x" << n2;
        ASSERT_DOUBLE_EQ(2.0 * r.u_a, static_cast<double>(testkit::doubled_u(a, b)));
      }
    }
  }
}

TEST(RankSum, NormalApproximationAgainstKnownValue) {
  // 10 vs 10 untied, complete separation: U = 0, mean 50, sd sqrt(175).
  std::vector<double> a, b;
  for (int i = 0; i < 10; ++i) {
    a.push_back(i);
    b.push_back(100 + i);
  }
  const RankSumResult r = wilcoxon_rank_sum(a, b);
  EXPECT_FALSE(r.exact);
  const double z = -(50.0 - 0.5) / std::sqrt(175.0);
  EXPECT_NEAR(r.z, z, 1e-12);
  EXPECT_NEAR(r.p, std::erfc(-z / std::sqrt(2.0)), 1e-12);
}

TEST(RankSum, Properties) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const auto a = sample(rng, 1 + rng() % 15, trial % 3 == 0);
    const auto b = sample(rng, 1 + rng() % 15, trial % 3 == 0);
    const RankSumResult ab = wilcoxon_rank_sum(a, b);
    const RankSumResult ba = wilcoxon_rank_sum(b, a);
    ASSERT_DOUBLE_EQ(ab.u_a + ab.u_b, static_cast<double>(a.size() * b.size()));
    ASSERT_DOUBLE_EQ(ab.u_a, ba.u_b);
    ASSERT_NEAR(ab.p, ba.p, 1e-12);
    ASSERT_NEAR(ab.z, -ba.z, 1e-12);
    ASSERT_GE(ab.p, 0.0);
    ASSERT_LE(ab.p, 1.0);
    // Any strictly increasing transform leaves the test unchanged.
    std::vector<double> ea, eb;
    for (double x : a) ea.push_back(std::exp(3.0 * x) + 7.0);
    for (double x : b) eb.push_back(std::exp(3.0 * x) + 7.0);
    const RankSumResult t = wilcoxon_rank_sum(ea, eb);
    ASSERT_DOUBLE_EQ(t.u_a, ab.u_a);
    ASSERT_DOUBLE_EQ(t.p, ab.p);
  }
}

TEST(RankSum, RejectsEmptyAndNaN) {
  const std::vector<double> a{1.0}, empty, nan{std::nan("")};
  EXPECT_THROW(wilcoxon_rank_sum(a, empty), Error);
  EXPECT_THROW(wilcoxon_rank_sum(a, nan), Error);
}

TEST(Bonferroni, Examples) {
  const std::vector<double> p{0.01, 0.02, 0.5};
  EXPECT_EQ(bonferroni(p, 0.05, 3), (std::vector<bool>{true, false, false}));
  const std::vector<double> q{0.0027, 0.0029};
  EXPECT_EQ(bonferroni(q, 0.05, 18), (std::vector<bool>{true, false}));
  EXPECT_THROW(bonferroni(q, 0.05, 0), Error);
}

TEST(CompareGroups, SmallCellsAreUntestable) {
  const std::vector<Lexicon> lexicons{lex("aggression", {"idiot"})};
  std::vector<ConversationPair> pairs;
  for (int i = 0; i < 3; ++i) {
    pairs.push_back(pair_with(Outcome::hateful, Community::meme, "you idiot"));
    pairs.push_back(pair_with(Outcome::non_hateful, Community::meme, "thanks friend"));
  }
  const auto results = compare_groups(pairs, lexicons, Grouping::hateful_vs_nonhateful);
  ASSERT_EQ(results.size(), 2u);  // Meme and All
  for (const auto& r : results) EXPECT_FALSE(r.testable);
  EXPECT_EQ(render_comparison_csv(results), "grouping,community,category,direction,U,z,p,sig_raw,sig_bonferroni\n");
  EXPECT_NE(render_comparison_markdown(results).find("untestable"), std::string::npos);
}

TEST(CompareGroups, PlantedCategoryIsFlaggedWithDirection) {
  const std::vector<Lexicon> lexicons{lex("aggression", {"idiot", "moron"}), lex("filler", {"the"})};
  std::mt19937_64 rng(9);
  std::vector<ConversationPair> pairs;
  for (int i = 0; i < 60; ++i) {
    const Community c = i % 2 ? Community::identity : Community::hobby;
    pairs.push_back(pair_with(Outcome::hateful, c, rng() % 5 ? "the idiot moron said" : "the point stands"));
    pairs.push_back(pair_with(Outcome::non_hateful, c, rng() % 5 ? "the point stands" : "the idiot spoke"));
    pairs.push_back(pair_with(Outcome::no_reentry, c, "ignored"));
  }
  const auto results = compare_groups(pairs, lexicons, Grouping::hateful_vs_nonhateful);
  ASSERT_EQ(results.size(), 6u);  // identity, hobby, All x 2 categories
  for (const auto& r : results) {
    EXPECT_TRUE(r.testable);
    EXPECT_EQ(r.n_a, r.community == "All" ? 60u : 30u);
    if (r.category == "aggression") {
      EXPECT_TRUE(r.significant_bonferroni) << r.community;
      EXPECT_EQ(r.direction, Direction::higher_in_a);
      EXPECT_EQ(r.group_a, "hateful");
    }
  }
  EXPECT_EQ(results[0].community, "Identity");
  EXPECT_EQ(results.back().community, "All");
  const std::string csv = render_comparison_csv(results);
  EXPECT_NE(csv.find("hateful_vs_nonhateful,All,aggression,higher_in_hateful,"), std::string::npos);
}

TEST(CompareGroups, ReentryGroupingUsesAllPairs) {
  const std::vector<Lexicon> lexicons{lex("thanks", {"thanks"})};
  std::vector<ConversationPair> pairs;
  for (int i = 0; i < 5; ++i) {
    pairs.push_back(pair_with(Outcome::hateful, Community::meme, "thanks"));
    pairs.push_back(pair_with(Outcome::non_hateful, Community::meme, "thanks"));
    pairs.push_back(pair_with(Outcome::no_reentry, Community::meme, "nope"));
  }
  CompareOptions options;
  options.by_community = false;
  const auto results = compare_groups(pairs, lexicons, Grouping::reentry_vs_no, options);
  ASSERT_EQ(results.size(), 1u);
  EXPECT_EQ(results[0].n_a, 10u);
  EXPECT_EQ(results[0].n_b, 5u);
  EXPECT_EQ(results[0].direction, Direction::higher_in_a);
}
