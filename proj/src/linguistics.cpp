#include "reentry/linguistics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "reentry/error.hpp"
#include "reentry/text.hpp"

namespace reentry {

LexiconProfile profile_text(std::string_view text, std::span<const Lexicon> lexicons) {
  LexiconProfile profile;
  const std::vector<std::string> tokens = tokenize(text);
  profile.token_count = tokens.size();
  profile.degenerate = tokens.empty();
  for (const Lexicon& lex : lexicons) {
    profile.categories.push_back(lex.name);
    profile.scores.push_back(tokens.empty() ? 0.0
                                            : static_cast<double>(lex.count_matches(tokens)) /
                                                  static_cast<double>(tokens.size()));
  }
  return profile;
}

// ---------------------------------------------------------------------------
// Rank-sum test

namespace {

struct PooledRanks {
  std::vector<long> doubled;  // 2 * midrank, aligned with the pooled input order
  double tie_term = 0.0;      // sum of t^3 - t over tie groups
};

PooledRanks pooled_ranks(std::span<const double> a, std::span<const double> b) {
  std::vector<double> values(a.begin(), a.end());
  values.insert(values.end(), b.begin(), b.end());
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return values[x] < values[y]; });
  PooledRanks r;
  r.doubled.assign(values.size(), 0);
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    // positions i..j-1 share midrank (i+1 + j) / 2
    const long twice = static_cast<long>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) r.doubled[order[k]] = twice;
    const double t = static_cast<double>(j - i);
    r.tie_term += t * t * t - t;
    i = j;
  }
  return r;
}

// P(W <= w) and P(W >= w) where W is the doubled rank sum of `m` values drawn
// without replacement from `doubled`.
std::pair<long double, long double> exact_tails(const std::vector<long>& doubled, std::size_t m, long w) {
  long max_sum = 0;
  {
    std::vector<long> sorted(doubled);
    std::sort(sorted.rbegin(), sorted.rend());
    for (std::size_t k = 0; k < m; ++k) max_sum += sorted[k];
  }
  const std::size_t width = static_cast<std::size_t>(max_sum) + 1;
  std::vector<std::vector<long double>> ways(m + 1, std::vector<long double>(width, 0.0L));
  ways[0][0] = 1.0L;
  std::size_t seen = 0;
  for (const long r : doubled) {
    ++seen;
    for (std::size_t k = std::min(seen, m); k >= 1; --k) {
      const auto& from = ways[k - 1];
      auto& to = ways[k];
      for (std::size_t s = 0; s + static_cast<std::size_t>(r) < width; ++s) {
        if (from[s] != 0.0L) to[s + static_cast<std::size_t>(r)] += from[s];
      }
    }
  }
  long double total = 0.0L, lower = 0.0L, upper = 0.0L;
  for (std::size_t s = 0; s < width; ++s) {
    const long double c = ways[m][s];
    total += c;
    if (static_cast<long>(s) <= w) lower += c;
    if (static_cast<long>(s) >= w) upper += c;
  }
  return {lower / total, upper / total};
}

}  // namespace

RankSumResult wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) fail(ErrorKind::invalid_argument, "rank-sum test needs two non-empty samples");
  const auto bad = [](double v) { return std::isnan(v); };
  if (std::any_of(a.begin(), a.end(), bad) || std::any_of(b.begin(), b.end(), bad)) {
    fail(ErrorKind::invalid_argument, "rank-sum test input contains NaN");
  }
  const double n1 = static_cast<double>(a.size());
  const double n2 = static_cast<double>(b.size());
  const double n = n1 + n2;
  const PooledRanks ranks = pooled_ranks(a, b);

  long rank_sum_a = 0;  // doubled
  for (std::size_t i = 0; i < a.size(); ++i) rank_sum_a += ranks.doubled[i];

  RankSumResult r;
  r.u_a = static_cast<double>(rank_sum_a) / 2.0 - n1 * (n1 + 1.0) / 2.0;
  r.u_b = n1 * n2 - r.u_a;

  const double variance = n1 * n2 / 12.0 * ((n + 1.0) - ranks.tie_term / (n * (n - 1.0)));
  const double d = r.u_a - n1 * n2 / 2.0;
  if (variance > 0.0) {
    const double corrected = std::max(std::abs(d) - 0.5, 0.0);
    r.z = std::copysign(corrected, d) / std::sqrt(variance);
    if (corrected == 0.0) r.z = 0.0;
  }

  if (std::min(a.size(), b.size()) <= kExactRankSumLimit) {
    r.exact = true;
    const bool a_small = a.size() <= b.size();
    const std::size_t m = a_small ? a.size() : b.size();
    long observed = 0;
    for (std::size_t i = 0; i < ranks.doubled.size(); ++i) {
      const bool in_a = i < a.size();
      if (in_a == a_small) observed += ranks.doubled[i];
    }
    const auto [lower, upper] = exact_tails(ranks.doubled, m, observed);
    r.p = static_cast<double>(std::min(1.0L, 2.0L * std::min(lower, upper)));
  } else {
    r.p = variance > 0.0 ? std::min(1.0, std::erfc(std::abs(r.z) / std::sqrt(2.0))) : 1.0;
  }
  return r;
}

std::vector<bool> bonferroni(std::span<const double> p_values, double alpha, long family_size) {
  if (family_size <= 0) fail(ErrorKind::invalid_argument, "Bonferroni family size must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::invalid_argument, "alpha must lie in (0, 1)");
  const double threshold = alpha / static_cast<double>(family_size);
  std::vector<bool> flags;
  flags.reserve(p_values.size());
  for (const double p : p_values) flags.push_back(p <= threshold);
  return flags;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Grouping grouping) {
  return grouping == Grouping::reentry_vs_no ? "reentry_vs_no" : "hateful_vs_nonhateful";
}

Grouping grouping_from_string(std::string_view name) {
  if (name == "reentry_vs_no") return Grouping::reentry_vs_no;
  if (name == "hateful_vs_nonhateful") return Grouping::hateful_vs_nonhateful;
  fail(ErrorKind::config, "unknown grouping \"" + std::string(name) + "\"");
}

std::string_view to_string(Direction direction) {
  return direction == Direction::higher_in_a ? "higher_in_a" : "higher_in_b";
}

namespace {

double center(std::vector<double> values, DirectionBasis basis) {
  if (values.empty()) return 0.0;
  if (basis == DirectionBasis::mean) {
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  }
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : (values[mid - 1] + values[mid]) / 2.0;
}

// Smallest two-sided p an exact test on untied data of these sizes can give.
double smallest_attainable_p(std::size_t n_a, std::size_t n_b) {
  const double log_choose = std::lgamma(static_cast<double>(n_a + n_b) + 1.0) -
                            std::lgamma(static_cast<double>(n_a) + 1.0) -
                            std::lgamma(static_cast<double>(n_b) + 1.0);
  return std::min(1.0, 2.0 * std::exp(-log_choose));
}

std::string number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

std::vector<ComparisonResult> compare_groups(std::span<const ConversationPair> pairs,
                                             std::span<const Lexicon> lexicons, Grouping grouping,
                                             const CompareOptions& options) {
  if (lexicons.empty()) fail(ErrorKind::config, "no lexicon categories to compare");
  if (!(options.alpha > 0.0 && options.alpha < 1.0)) fail(ErrorKind::config, "analysis.alpha must lie in (0, 1)");

  const bool type_split = grouping == Grouping::hateful_vs_nonhateful;
  const std::string name_a = type_split ? "hateful" : "reentry";
  const std::string name_b = type_split ? "non_hateful" : "no_reentry";

  struct Item {
    bool in_a;
    Community community;
    std::vector<double> scores;
  };
  std::vector<Item> items;
  for (const auto& p : pairs) {
    if (type_split && p.outcome == Outcome::no_reentry) continue;
    const bool in_a = type_split ? p.outcome == Outcome::hateful : p.outcome != Outcome::no_reentry;
    items.push_back({in_a, p.community, profile_text(p.cs.body, lexicons).scores});
  }

  std::vector<std::pair<std::string, std::optional<Community>>> cells;
  if (options.by_community) {
    for (const Community c : kCommunities) {
      if (std::any_of(items.begin(), items.end(), [&](const Item& it) { return it.community == c; })) {
        cells.emplace_back(std::string(to_string(c)), c);
      }
    }
  }
  cells.emplace_back("All", std::nullopt);

  std::vector<ComparisonResult> results;
  const long family = static_cast<long>(lexicons.size());
  for (const auto& [cell_name, community] : cells) {
    std::vector<const Item*> group_a, group_b;
    for (const Item& it : items) {
      if (community && it.community != *community) continue;
      (it.in_a ? group_a : group_b).push_back(&it);
    }
    const bool testable = std::min(group_a.size(), group_b.size()) >= 2 &&
                          smallest_attainable_p(group_a.size(), group_b.size()) <= options.alpha;

    std::vector<ComparisonResult> cell;
    std::vector<double> p_values;
    for (std::size_t k = 0; k < lexicons.size(); ++k) {
      ComparisonResult r;
      r.grouping = grouping;
      r.community = cell_name;
      r.category = lexicons[k].name;
      r.group_a = name_a;
      r.group_b = name_b;
      r.n_a = group_a.size();
      r.n_b = group_b.size();
      r.testable = testable;
      std::vector<double> xa, xb;
      for (const Item* it : group_a) xa.push_back(it->scores[k]);
      for (const Item* it : group_b) xb.push_back(it->scores[k]);
      r.center_a = center(xa, options.basis);
      r.center_b = center(xb, options.basis);
      r.direction = r.center_a > r.center_b ? Direction::higher_in_a : Direction::higher_in_b;
      if (testable) {
        const RankSumResult test = wilcoxon_rank_sum(xa, xb);
        r.u = test.u_a;
        r.z = test.z;
        r.p = test.p;
        r.significant_raw = test.p <= options.alpha;
      }
      p_values.push_back(r.p);
      cell.push_back(std::move(r));
    }
    if (testable) {
      const std::vector<bool> flags = bonferroni(p_values, options.alpha, family);
      for (std::size_t k = 0; k < cell.size(); ++k) cell[k].significant_bonferroni = flags[k];
    }
    results.insert(results.end(), cell.begin(), cell.end());
  }
  return results;
}

std::string render_comparison_csv(std::span<const ComparisonResult> results) {
  std::ostringstream out;
  out << "grouping,community,category,direction,U,z,p,sig_raw,sig_bonferroni\n";
  for (const auto& r : results) {
    if (!r.testable) continue;
    out << to_string(r.grouping) << ',' << r.community << ',' << r.category << ','
        << (r.direction == Direction::higher_in_a ? "higher_in_" + r.group_a : "higher_in_" + r.group_b) << ','
        << number(r.u) << ',' << number(r.z) << ',' << number(r.p) << ','
        << (r.significant_raw ? "true" : "false") << ',' << (r.significant_bonferroni ? "true" : "false")
        << '\n';
  }
  return out.str();
}

std::string render_comparison_markdown(std::span<const ComparisonResult> results) {
  std::ostringstream out;
  std::vector<Grouping> groupings;
  for (const auto& r : results) {
    if (std::find(groupings.begin(), groupings.end(), r.grouping) == groupings.end()) groupings.push_back(r.grouping);
  }
  for (const Grouping g : groupings) {
    std::vector<std::string> cells, categories;
    std::map<std::pair<std::string, std::string>, const ComparisonResult*> grid;
    std::string first_group;
    for (const auto& r : results) {
      if (r.grouping != g) continue;
      first_group = r.group_a;
      if (std::find(cells.begin(), cells.end(), r.community) == cells.end()) cells.push_back(r.community);
      if (std::find(categories.begin(), categories.end(), r.category) == categories.end()) {
        categories.push_back(r.category);
      }
      grid[{r.category, r.community}] = &r;
    }
    out << "### " << to_string(g) << "\n\n"
        << "Up arrow: higher in " << first_group << "; = equal centers. Underlined: does not pass Bonferroni.\n\n| Category |";
    for (const auto& c : cells) out << ' ' << c << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < cells.size(); ++i) out << ":---:|";
    out << '\n';
    for (const auto& cat : categories) {
      out << "| " << cat << " |";
      for (const auto& c : cells) {
        const ComparisonResult* r = grid[{cat, c}];
        if (!r || !r->testable) {
          out << " untestable |";
          continue;
        }
        const char* arrow = r->center_a == r->center_b ? "=" : r->direction == Direction::higher_in_a ? "↑" : "↓";
        if (r->significant_bonferroni) {
          out << ' ' << arrow << " |";
        } else {
          out << " <u>" << arrow << "</u> |";
        }
      }
      out << '\n';
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace reentry
