#include "reentry/outcomes.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <tuple>

#include "reentry/error.hpp"

namespace reentry {

using nlohmann::json;

std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::no_reentry: return "no_reentry";
    case Outcome::hateful: return "hateful";
    case Outcome::non_hateful: return "non_hateful";
  }
  return "no_reentry";
}

Outcome outcome_from_string(std::string_view name) {
  for (const Outcome o : kOutcomes) {
    if (to_string(o) == name) return o;
  }
  fail(ErrorKind::parse, "unknown outcome \"" + std::string(name) + "\"");
}

Outcome outcome_from_index(int index) {
  if (index < 0 || index > 2) fail(ErrorKind::invalid_argument, "outcome index out of range");
  return static_cast<Outcome>(index);
}

std::string_view to_string(Community community) {
  switch (community) {
    case Community::discussion: return "Discussion";
    case Community::identity: return "Identity";
    case Community::media_sharing: return "Media-sharing";
    case Community::meme: return "Meme";
    case Community::hobby: return "Hobby";
    case Community::uncategorized: return "Uncategorized";
  }
  return "Uncategorized";
}

Community community_from_string(std::string_view name) {
  std::string lowered;
  for (const char c : name) {
    if (c != '-' && c != '_' && c != ' ') lowered += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  for (const Community c : kCommunities) {
    std::string candidate;
    for (const char ch : to_string(c)) {
      if (ch != '-') candidate += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    }
    if (candidate == lowered) return c;
  }
  fail(ErrorKind::config, "unknown community \"" + std::string(name) + "\"");
}

namespace {

std::string normalize_subreddit(std::string_view name) {
  std::string s(name);
  if (s.size() > 2 && (s[0] == 'r' || s[0] == 'R') && s[1] == '/') s = s.substr(2);
  if (s.size() > 3 && s[0] == '/' && (s[1] == 'r' || s[1] == 'R') && s[2] == '/') s = s.substr(3);
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

CommunityMap CommunityMap::builtin() {
  static const std::vector<std::pair<Community, std::vector<const char*>>> table{
      {Community::discussion,
       {"antiwork", "changemyview", "NoFap", "Seduction", "PurplePillDebate", "ShitPoliticsSays",
        "bindingofisaac", "FemaleDatingStrategy", "SubredditDrama"}},
      {Community::hobby, {"KotakuInAction", "DotA2", "technology", "modernwarfare", "playrust", "oblivion"}},
      {Community::identity,
       {"bakchodi", "Feminism", "PussyPass", "MensRights", "Sino", "BlackPeopleTwitter", "india",
        "PussyPassDenied", "TwoXChromosomes", "GenZedong", "antheism"}},
      {Community::meme,
       {"4Chan", "justneckbeardthings", "HermanCainAward", "MetaCanada", "DankMemes", "ShitRedditSays"}},
      {Community::media_sharing,
       {"conspiracy", "worldnews", "Drama", "TumblrInAction", "lmGoingToHellForThis",
        "ImGoingToHellForThis", "TrueReddit"}},
  };
  CommunityMap m;
  for (const auto& [community, names] : table) {
    for (const char* n : names) m.map_[normalize_subreddit(n)] = community;
  }
  return m;
}

CommunityMap CommunityMap::from_json(const json& doc) {
  if (!doc.is_object()) fail(ErrorKind::config, "community map: expected {\"subreddit\": \"Community\"}");
  CommunityMap m;
  for (const auto& [sub, community] : doc.items()) {
    if (!community.is_string()) fail(ErrorKind::config, "community map." + sub + ": expected a string");
    m.map_[normalize_subreddit(sub)] = community_from_string(community.get<std::string>());
  }
  return m;
}

CommunityMap CommunityMap::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::config, "cannot open community map " + path.string());
  const json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) fail(ErrorKind::config, "community map " + path.string() + ": malformed JSON");
  return from_json(doc);
}

Community CommunityMap::lookup(std::string_view subreddit) const {
  const auto it = map_.find(normalize_subreddit(subreddit));
  return it == map_.end() ? Community::uncategorized : it->second;
}

json CommunityMap::to_json() const {
  json doc = json::object();
  for (const auto& [sub, community] : map_) doc[sub] = to_string(community);
  return doc;
}

// ---------------------------------------------------------------------------

std::string ConversationPair::id() const {
  return std::string(strip_kind_prefix(hs.id)) + ":" + std::string(strip_kind_prefix(cs.id));
}

std::vector<PairDraft> find_pairs(const DialogueTree& tree, const std::set<std::string>& hs_ids,
                                  const std::set<std::string>& cs_ids) {
  for (const auto* ids : {&hs_ids, &cs_ids}) {
    for (const std::string& id : *ids) {
      if (!tree.contains(id)) {
        fail(ErrorKind::inconsistency, "labelled comment " + id + " is not in thread " + tree.thread_id());
      }
    }
  }
  std::vector<PairDraft> drafts;
  for (const std::string& h : hs_ids) {
    const Comment& hs = tree.at(h);
    if (hs.deleted_author()) continue;  // reentry cannot be detected
    for (const std::string& c : tree.children(h)) {
      if (!cs_ids.count(c)) continue;
      const Comment& cs = tree.at(c);
      if (cs.author == hs.author) continue;      // self-reply
      if (tree.children(c).empty()) continue;    // no follow-up
      drafts.push_back({tree.thread_id(), hs, cs});
    }
  }
  std::sort(drafts.begin(), drafts.end(), [](const PairDraft& a, const PairDraft& b) {
    return std::forward_as_tuple(strip_kind_prefix(a.hs.id), strip_kind_prefix(a.cs.id)) <
           std::forward_as_tuple(strip_kind_prefix(b.hs.id), strip_kind_prefix(b.cs.id));
  });
  return drafts;
}

ReentryLabel label_reentry(const PairDraft& draft, const DialogueTree& tree,
                           const HatefulPredicate& is_hateful) {
  const Comment* first = nullptr;
  if (!draft.hs.deleted_author()) {
    for (const Comment* c : tree.descendants(strip_kind_prefix(draft.cs.id))) {
      if (c->author != draft.hs.author) continue;
      if (!first || std::forward_as_tuple(c->created_utc, strip_kind_prefix(c->id)) <
                        std::forward_as_tuple(first->created_utc, strip_kind_prefix(first->id))) {
        first = c;
      }
    }
  }
  ReentryLabel label;
  if (!first) return label;
  label.reentry = *first;
  label.outcome = is_hateful(*first) ? Outcome::hateful : Outcome::non_hateful;
  return label;
}

ConversationPair make_pair(const PairDraft& draft, const ReentryLabel& label,
                           const CommunityMap& communities) {
  ConversationPair p;
  p.thread_id = draft.thread_id;
  p.hs = draft.hs;
  p.cs = draft.cs;
  p.outcome = label.outcome;
  p.reentry = label.reentry;
  p.subreddit = draft.hs.subreddit;
  p.community = communities.lookup(p.subreddit);
  return p;
}

// ---------------------------------------------------------------------------

SummaryRow summary_row(std::string name, const std::array<std::size_t, 3>& counts) {
  SummaryRow row;
  row.name = std::move(name);
  row.counts = counts;
  row.total = counts[0] + counts[1] + counts[2];
  for (std::size_t k = 0; k < 3; ++k) {
    // round(100 * count / total), halves away from zero, in integers
    row.percent[k] = row.total == 0
                         ? 0
                         : static_cast<long>((200 * counts[k] + row.total) / (2 * row.total));
  }
  return row;
}

std::vector<SummaryRow> summarize_corpus(std::span<const ConversationPair> pairs) {
  if (pairs.empty()) return {};
  std::array<std::array<std::size_t, 3>, kCommunities.size()> per{};
  std::array<std::size_t, 3> all{};
  for (const auto& p : pairs) {
    ++per[static_cast<std::size_t>(p.community)][static_cast<std::size_t>(to_index(p.outcome))];
    ++all[static_cast<std::size_t>(to_index(p.outcome))];
  }
  std::vector<SummaryRow> rows;
  for (const Community c : kCommunities) {
    const auto& counts = per[static_cast<std::size_t>(c)];
    if (counts[0] + counts[1] + counts[2] == 0) continue;
    rows.push_back(summary_row(std::string(to_string(c)), counts));
  }
  rows.push_back(summary_row("All", all));
  return rows;
}

std::string render_summary_markdown(std::span<const SummaryRow> rows) {
  std::ostringstream out;
  out << "| Community | Pairs | No Reentry (%) | Hateful Reentry (%) | Non-hateful Reentry (%) |\n"
      << "|---|---:|---:|---:|---:|\n";
  for (const auto& r : rows) {
    out << "| " << r.name << " | " << r.total;
    for (std::size_t k = 0; k < 3; ++k) out << " | " << r.counts[k] << " (" << r.percent[k] << "%)";
    out << " |\n";
  }
  return out.str();
}

std::string render_summary_csv(std::span<const SummaryRow> rows) {
  std::ostringstream out;
  out << "community,pairs,no_reentry,no_reentry_pct,hateful,hateful_pct,non_hateful,non_hateful_pct\n";
  for (const auto& r : rows) {
    out << r.name << ',' << r.total;
    for (std::size_t k = 0; k < 3; ++k) out << ',' << r.counts[k] << ',' << r.percent[k];
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------

json pair_to_json(const ConversationPair& p) {
  return json{{"pair_id", p.id()},
              {"thread_id", p.thread_id},
              {"hs_id", p.hs.id},
              {"cs_id", p.cs.id},
              {"hs_text", p.hs.body},
              {"cs_text", p.cs.body},
              {"outcome", to_string(p.outcome)},
              {"reentry_id", p.reentry ? json(p.reentry->id) : json(nullptr)},
              {"subreddit", p.subreddit},
              {"community", to_string(p.community)}};
}

ConversationPair pair_from_json(const json& r) {
  if (!r.is_object()) fail(ErrorKind::parse, "pair record is not an object");
  const auto str = [&](const char* key) {
    const auto it = r.find(key);
    if (it == r.end() || !it->is_string()) fail(ErrorKind::parse, std::string("pair record: missing ") + key);
    return it->get<std::string>();
  };
  ConversationPair p;
  p.thread_id = r.value("thread_id", std::string());
  p.hs.id = str("hs_id");
  p.cs.id = str("cs_id");
  p.hs.body = str("hs_text");
  p.cs.body = str("cs_text");
  p.hs.thread_id = p.cs.thread_id = p.thread_id;
  p.outcome = outcome_from_string(str("outcome"));
  if (const auto it = r.find("reentry_id"); it != r.end() && it->is_string()) {
    Comment reentry;
    reentry.id = it->get<std::string>();
    p.reentry = reentry;
  }
  if ((p.outcome == Outcome::no_reentry) == p.reentry.has_value()) {
    fail(ErrorKind::parse, "pair " + p.id() + ": reentry_id must be present iff the hater reentered");
  }
  p.subreddit = str("subreddit");
  p.hs.subreddit = p.cs.subreddit = p.subreddit;
  p.community = community_from_string(str("community"));
  return p;
}

std::vector<ConversationPair> read_pairs_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::missing_input, "cannot open " + path.string());
  std::vector<ConversationPair> pairs;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const json r = json::parse(line, nullptr, false);
    if (r.is_discarded()) fail(ErrorKind::parse, path.string() + ":" + std::to_string(number) + ": malformed JSON");
    try {
      pairs.push_back(pair_from_json(r));
    } catch (const Error& e) {
      fail(e.kind(), path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return pairs;
}

}  // namespace reentry
