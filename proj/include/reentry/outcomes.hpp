#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "reentry/ingest.hpp"

namespace reentry {

// The numeric order is the fixed class order used for every tie rule.
enum class Outcome { no_reentry = 0, hateful = 1, non_hateful = 2 };

inline constexpr std::array<Outcome, 3> kOutcomes{Outcome::no_reentry, Outcome::hateful,
                                                  Outcome::non_hateful};

std::string_view to_string(Outcome outcome);
Outcome outcome_from_string(std::string_view name);
inline int to_index(Outcome outcome) { return static_cast<int>(outcome); }
Outcome outcome_from_index(int index);

enum class Community { discussion, identity, media_sharing, meme, hobby, uncategorized };

inline constexpr std::array<Community, 6> kCommunities{
    Community::discussion, Community::identity, Community::media_sharing,
    Community::meme,       Community::hobby,    Community::uncategorized};

std::string_view to_string(Community community);
Community community_from_string(std::string_view name);

/// Subreddit -> community. Lookup ignores case and a leading "r/".
class CommunityMap {
 public:
  static CommunityMap builtin();
  static CommunityMap from_json(const nlohmann::json& doc);
  static CommunityMap load(const std::filesystem::path& path);

  Community lookup(std::string_view subreddit) const;
  nlohmann::json to_json() const;
  std::size_t size() const { return map_.size(); }

 private:
  std::map<std::string, Community> map_;
};

struct PairDraft {
  std::string thread_id;
  Comment hs;
  Comment cs;
};

struct ConversationPair {
  std::string thread_id;
  Comment hs;
  Comment cs;
  Outcome outcome = Outcome::no_reentry;
  std::optional<Comment> reentry;
  std::string subreddit;
  Community community = Community::uncategorized;

  /// "<hs id>:<cs id>", unique within a corpus.
  std::string id() const;
};

/// Every (h, c) with h hateful, c a counterspeech direct child of h with at
/// least one reply, and different authors. Ordered by (hs id, cs id).
std::vector<PairDraft> find_pairs(const DialogueTree& tree, const std::set<std::string>& hs_ids,
                                  const std::set<std::string>& cs_ids);

using HatefulPredicate = std::function<bool(const Comment&)>;

struct ReentryLabel {
  Outcome outcome = Outcome::no_reentry;
  std::optional<Comment> reentry;
};

/// The earliest (created_utc, id) hater-authored comment below the
/// counterspeech decides the outcome.
ReentryLabel label_reentry(const PairDraft& draft, const DialogueTree& tree,
                           const HatefulPredicate& is_hateful);

ConversationPair make_pair(const PairDraft& draft, const ReentryLabel& label,
                           const CommunityMap& communities);

struct SummaryRow {
  std::string name;
  std::size_t total = 0;
  std::array<std::size_t, 3> counts{};  // indexed by Outcome
  std::array<long, 3> percent{};        // nearest integer, halves away from zero
};

SummaryRow summary_row(std::string name, const std::array<std::size_t, 3>& counts);

/// One row per community present (fixed community order) then "All".
std::vector<SummaryRow> summarize_corpus(std::span<const ConversationPair> pairs);

std::string render_summary_markdown(std::span<const SummaryRow> rows);
std::string render_summary_csv(std::span<const SummaryRow> rows);

nlohmann::json pair_to_json(const ConversationPair& pair);
ConversationPair pair_from_json(const nlohmann::json& record);
std::vector<ConversationPair> read_pairs_file(const std::filesystem::path& path);

}  // namespace reentry
