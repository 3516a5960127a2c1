#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "reentry/lexicon.hpp"
#include "reentry/outcomes.hpp"

namespace reentry {

struct LexiconProfile {
  std::vector<std::string> categories;
  std::vector<double> scores;  // matched tokens / total tokens, per category
  std::size_t token_count = 0;
  bool degenerate = false;  // no tokens; all scores zero
};

LexiconProfile profile_text(std::string_view text, std::span<const Lexicon> lexicons);

struct RankSumResult {
  double u_a = 0.0;  // Mann-Whitney U of the first sample
  double u_b = 0.0;
  double z = 0.0;
  double p = 1.0;  // two-sided
  bool exact = false;
};

/// Wilcoxon rank-sum / Mann-Whitney U with midranks. Exact p-value (over the
/// tie-aware permutation distribution) when the smaller sample has at most
/// kExactRankSumLimit values; otherwise the tie-corrected normal
/// approximation with continuity correction.
RankSumResult wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b);

inline constexpr std::size_t kExactRankSumLimit = 8;

/// flag[i] = p[i] <= alpha / family_size.
std::vector<bool> bonferroni(std::span<const double> p_values, double alpha, long family_size);

enum class Grouping { reentry_vs_no, hateful_vs_nonhateful };
enum class Direction { higher_in_a, higher_in_b };
enum class DirectionBasis { mean, median };

std::string_view to_string(Grouping grouping);
Grouping grouping_from_string(std::string_view name);
std::string_view to_string(Direction direction);

struct CompareOptions {
  double alpha = 0.05;
  DirectionBasis basis = DirectionBasis::mean;
  bool by_community = true;
};

struct ComparisonResult {
  Grouping grouping = Grouping::reentry_vs_no;
  std::string community;  // community name or "All"
  std::string category;
  std::string group_a;
  std::string group_b;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  double center_a = 0.0;
  double center_b = 0.0;
  Direction direction = Direction::higher_in_a;
  double u = 0.0;
  double z = 0.0;
  double p = 1.0;
  bool significant_raw = false;
  bool significant_bonferroni = false;
  bool testable = true;
};

/// Profiles each pair's counterspeech and runs one rank-sum test per
/// (cell, category). Cells are "All" plus each community present when
/// `by_community`. The Bonferroni family is the set of categories in a cell.
std::vector<ComparisonResult> compare_groups(std::span<const ConversationPair> pairs,
                                             std::span<const Lexicon> lexicons, Grouping grouping,
                                             const CompareOptions& options = {});

/// CSV of the testable rows.
std::string render_comparison_csv(std::span<const ComparisonResult> results);
/// Category x community grid of arrows; arrows failing Bonferroni are underlined.
std::string render_comparison_markdown(std::span<const ComparisonResult> results);

}  // namespace reentry
