#include "reentry/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <limits>
#include <set>
#include <tuple>

#include "reentry/error.hpp"

namespace reentry {

using nlohmann::json;

namespace {

bool blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

const json& field(const json& record, const char* name) {
  const auto it = record.find(name);
  if (it == record.end()) fail(ErrorKind::parse, std::string("missing field \"") + name + "\"");
  return *it;
}

std::string required_string(const json& record, const char* name, bool allow_empty) {
  const json& value = field(record, name);
  if (!value.is_string()) fail(ErrorKind::parse, std::string("field \"") + name + "\" is not a string");
  std::string s = value.get<std::string>();
  if (!allow_empty && s.empty()) fail(ErrorKind::parse, std::string("field \"") + name + "\" is empty");
  return s;
}

std::string optional_string(const json& record, const char* name) {
  const auto it = record.find(name);
  if (it == record.end() || it->is_null()) return {};
  if (!it->is_string()) fail(ErrorKind::parse, std::string("field \"") + name + "\" is not a string");
  return it->get<std::string>();
}

std::int64_t timestamp(const json& record) {
  const json& value = field(record, "created_utc");
  if (value.is_number_unsigned()) {
    const auto v = value.get<std::uint64_t>();
    if (v > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
      fail(ErrorKind::parse, "created_utc out of range");
    }
    return static_cast<std::int64_t>(v);
  }
  if (value.is_number_integer()) {
    const auto v = value.get<std::int64_t>();
    if (v < 0) fail(ErrorKind::parse, "created_utc is negative");
    return v;
  }
  fail(ErrorKind::parse, "field \"created_utc\" is not an integer");
}

std::string key_of(const Comment& c) { return std::string(strip_kind_prefix(c.id)); }

}  // namespace

std::string_view strip_kind_prefix(std::string_view id) {
  if (id.size() > 3 && id[0] == 't' && id[2] == '_' && id[1] >= '1' && id[1] <= '9') {
    return id.substr(3);
  }
  return id;
}

Comment comment_from_json(const json& record) {
  if (!record.is_object()) fail(ErrorKind::parse, "record is not a JSON object");
  Comment c;
  c.id = required_string(record, "id", false);
  if (const auto it = record.find("parent_id"); it != record.end() && !it->is_null()) {
    if (!it->is_string()) fail(ErrorKind::parse, "field \"parent_id\" is not a string or null");
    if (!it->get_ref<const std::string&>().empty()) c.parent_id = it->get<std::string>();
  }
  c.thread_id = required_string(record, "link_id", false);
  c.author = required_string(record, "author", true);
  c.body = optional_string(record, "body");
  c.created_utc = timestamp(record);
  c.subreddit = optional_string(record, "subreddit");
  return c;
}

json comment_to_json(const Comment& c) {
  return json{{"id", c.id},
              {"parent_id", c.parent_id ? json(*c.parent_id) : json(nullptr)},
              {"link_id", c.thread_id},
              {"author", c.author},
              {"body", c.body},
              {"created_utc", c.created_utc},
              {"subreddit", c.subreddit}};
}

ParseResult parse_dump(std::istream& in, ParseMode mode) {
  if (!in) fail(ErrorKind::io, "dump stream is not readable");
  ParseResult result;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (blank(line)) continue;
    std::string reason;
    const json record = json::parse(line, nullptr, false);
    if (record.is_discarded()) {
      reason = "malformed JSON";
    } else {
      try {
        result.comments.push_back(comment_from_json(record));
        continue;
      } catch (const Error& e) {
        reason = e.what();
      }
    }
    if (mode == ParseMode::strict) {
      fail(ErrorKind::parse, "line " + std::to_string(number) + ": " + reason);
    }
    result.errors.push_back({number, reason});
  }
  if (in.bad()) fail(ErrorKind::io, "read error after line " + std::to_string(number));
  return result;
}

ParseResult parse_dump_file(const std::filesystem::path& path, ParseMode mode) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open dump " + path.string());
  return parse_dump(in, mode);
}

// ---------------------------------------------------------------------------
// DialogueTree

std::size_t DialogueTree::index_of(std::string_view id) const {
  const auto it = index_.find(std::string(strip_kind_prefix(id)));
  if (it == index_.end()) {
    fail(ErrorKind::inconsistency,
         "comment " + std::string(id) + " is not in thread " + thread_id_);
  }
  return it->second;
}

bool DialogueTree::contains(std::string_view id) const {
  return index_.count(std::string(strip_kind_prefix(id))) != 0;
}

const Comment& DialogueTree::at(std::string_view id) const { return nodes_[index_of(id)]; }

std::optional<std::string> DialogueTree::parent(std::string_view id) const {
  const std::size_t i = index_of(id);
  if (i == 0) return std::nullopt;
  return keys_[parent_[i]];
}

std::vector<std::string> DialogueTree::children(std::string_view id) const {
  std::vector<std::string> out;
  for (const std::size_t child : children_[index_of(id)]) out.push_back(keys_[child]);
  return out;
}

void DialogueTree::collect(std::size_t at, std::vector<const Comment*>& out) const {
  for (const std::size_t child : children_[at]) {
    out.push_back(&nodes_[child]);
    collect(child, out);
  }
}

std::vector<const Comment*> DialogueTree::descendants(std::string_view id) const {
  std::vector<const Comment*> out;
  collect(index_of(id), out);
  return out;
}

std::size_t DialogueTree::depth() const {
  std::vector<std::size_t> level(nodes_.size(), 1);
  std::size_t deepest = nodes_.empty() ? 0 : 1;
  // Preorder guarantees a parent precedes its children.
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    level[i] = level[parent_[i]] + 1;
    deepest = std::max(deepest, level[i]);
  }
  return deepest;
}

std::vector<std::pair<std::string, std::string>> DialogueTree::edges() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 1; i < nodes_.size(); ++i) out.emplace_back(keys_[parent_[i]], keys_[i]);
  return out;
}

// ---------------------------------------------------------------------------
// build_trees

struct TreeBuilder {
  static DialogueTree assemble(const std::vector<Comment>& comments,
                               const std::vector<std::string>& keys,
                               const std::vector<std::vector<std::size_t>>& kids, std::size_t root) {
    DialogueTree tree;
    tree.thread_id_ = comments[root].thread_id;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};  // (source index, parent slot)
    while (!stack.empty()) {
      const auto [src, parent_slot] = stack.back();
      stack.pop_back();
      const std::size_t slot = tree.nodes_.size();
      tree.nodes_.push_back(comments[src]);
      tree.keys_.push_back(keys[src]);
      tree.parent_.push_back(parent_slot);
      tree.children_.emplace_back();
      tree.index_.emplace(keys[src], slot);
      if (slot != 0) tree.children_[parent_slot].push_back(slot);
      const auto& c = kids[src];
      for (auto it = c.rbegin(); it != c.rend(); ++it) stack.emplace_back(*it, slot);
    }
    return tree;
  }
};

Forest build_trees(const std::vector<Comment>& comments, OrphanPolicy policy) {
  const std::size_t n = comments.size();
  std::vector<std::string> keys(n);
  std::unordered_map<std::string, std::size_t> index;
  index.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    keys[i] = key_of(comments[i]);
    if (!index.emplace(keys[i], i).second) {
      fail(ErrorKind::inconsistency, "duplicate comment id " + comments[i].id);
    }
  }

  enum class Status { root, child, orphan };
  constexpr std::size_t none = static_cast<std::size_t>(-1);
  std::vector<Status> status(n, Status::child);
  std::vector<std::size_t> parent(n, none);
  std::vector<std::string> orphan_reason(n);

  for (std::size_t i = 0; i < n; ++i) {
    const Comment& c = comments[i];
    if (!c.parent_id) {
      status[i] = Status::root;
      continue;
    }
    const std::string& raw = *c.parent_id;
    const std::string_view bare = strip_kind_prefix(raw);
    const bool prefixed = bare.size() != raw.size();
    if (raw.rfind("t3_", 0) == 0 || (!prefixed && bare == strip_kind_prefix(c.thread_id))) {
      status[i] = Status::root;  // reply to the submission itself
      continue;
    }
    const auto it = index.find(std::string(bare));
    if (it == index.end()) {
      status[i] = Status::orphan;
      orphan_reason[i] = "parent not found";
    } else if (strip_kind_prefix(comments[it->second].thread_id) != strip_kind_prefix(c.thread_id)) {
      status[i] = Status::orphan;
      orphan_reason[i] = "parent belongs to another thread";
    } else {
      parent[i] = it->second;
    }
  }

  std::vector<std::vector<std::size_t>> kids(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (parent[i] != none) kids[parent[i]].push_back(i);
  }
  const auto order = [&](std::size_t a, std::size_t b) {
    return std::tie(comments[a].created_utc, keys[a]) < std::tie(comments[b].created_utc, keys[b]);
  };
  for (auto& list : kids) std::sort(list.begin(), list.end(), order);

  // Mark everything reachable from roots and from orphans.
  std::vector<std::size_t> owner(n, none);
  const auto mark = [&](std::size_t top) {
    std::vector<std::size_t> stack{top};
    while (!stack.empty()) {
      const std::size_t at = stack.back();
      stack.pop_back();
      owner[at] = top;
      for (const std::size_t k : kids[at]) stack.push_back(k);
    }
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (status[i] != Status::child) mark(i);
  }

  // Whatever is left sits on a parent cycle (or hangs below one).
  for (std::size_t i = 0; i < n; ++i) {
    if (owner[i] != none) continue;
    std::vector<std::size_t> path;
    std::vector<char> on_path(n, 0);
    std::size_t at = i;
    while (!on_path[at]) {
      on_path[at] = 1;
      path.push_back(at);
      at = parent[at];
    }
    std::string ids;
    const auto start = std::find(path.begin(), path.end(), at);
    for (auto it = start; it != path.end(); ++it) {
      if (!ids.empty()) ids += ", ";
      ids += comments[*it].id;
    }
    fail(ErrorKind::inconsistency, "parent cycle among comments: " + ids);
  }

  Forest forest;
  std::vector<std::size_t> tops;
  for (std::size_t i = 0; i < n; ++i) {
    if (status[i] == Status::root) {
      tops.push_back(i);
    } else if (status[i] == Status::orphan) {
      if (policy == OrphanPolicy::promote_to_root) {
        tops.push_back(i);
        forest.orphans.push_back({keys[i], *comments[i].parent_id, orphan_reason[i] + "; promoted to root"});
      } else {
        forest.orphans.push_back({keys[i], *comments[i].parent_id, orphan_reason[i]});
      }
    } else if (status[owner[i]] == Status::orphan && policy == OrphanPolicy::drop) {
      forest.orphans.push_back({keys[i], *comments[owner[i]].parent_id,
                                "ancestor " + keys[owner[i]] + " orphaned"});
    }
  }

  std::sort(tops.begin(), tops.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(comments[a].thread_id, keys[a]) < std::tie(comments[b].thread_id, keys[b]);
  });
  forest.trees.reserve(tops.size());
  for (const std::size_t top : tops) {
    forest.trees.push_back(TreeBuilder::assemble(comments, keys, kids, top));
  }
  std::sort(forest.orphans.begin(), forest.orphans.end(),
            [](const OrphanReport& a, const OrphanReport& b) { return a.comment_id < b.comment_id; });
  return forest;
}

json tree_to_json(const DialogueTree& tree) {
  json comments = json::array();
  for (const Comment& c : tree.comments()) comments.push_back(comment_to_json(c));
  json edges = json::array();
  for (const auto& [p, c] : tree.edges()) edges.push_back(json::array({p, c}));
  return json{{"thread_id", tree.thread_id()}, {"comments", std::move(comments)}, {"edges", std::move(edges)}};
}

DialogueTree tree_from_json(const json& record) {
  if (!record.is_object() || !record.contains("comments") || !record["comments"].is_array()) {
    fail(ErrorKind::parse, "tree record needs a \"comments\" array");
  }
  std::vector<Comment> comments;
  for (const json& c : record["comments"]) comments.push_back(comment_from_json(c));
  if (comments.empty()) fail(ErrorKind::parse, "tree record has no comments");
  Forest forest = build_trees(comments, OrphanPolicy::promote_to_root);
  if (forest.trees.size() != 1) {
    fail(ErrorKind::inconsistency, "tree record for thread " + comments.front().thread_id +
                                       " does not form a single tree");
  }
  DialogueTree tree = std::move(forest.trees.front());
  if (const auto it = record.find("edges"); it != record.end()) {
    std::set<std::pair<std::string, std::string>> stored;
    for (const json& e : *it) {
      if (!e.is_array() || e.size() != 2) fail(ErrorKind::parse, "edge is not a [parent, child] pair");
      stored.emplace(e[0].get<std::string>(), e[1].get<std::string>());
    }
    const auto derived = tree.edges();
    if (stored != std::set<std::pair<std::string, std::string>>(derived.begin(), derived.end())) {
      fail(ErrorKind::inconsistency, "edges disagree with parent ids in thread " + tree.thread_id());
    }
  }
  return tree;
}

std::vector<DialogueTree> read_trees_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::missing_input, "cannot open " + path.string());
  std::vector<DialogueTree> trees;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (blank(line)) continue;
    const json record = json::parse(line, nullptr, false);
    if (record.is_discarded()) {
      fail(ErrorKind::parse, path.string() + ":" + std::to_string(number) + ": malformed JSON");
    }
    try {
      trees.push_back(tree_from_json(record));
    } catch (const Error& e) {
      fail(e.kind(), path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return trees;
}

}  // namespace reentry
