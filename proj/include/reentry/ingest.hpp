#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

namespace reentry {

inline constexpr std::string_view kDeletedAuthor = "[deleted]";

struct Comment {
  std::string id;
  std::optional<std::string> parent_id;
  std::string thread_id;  // link_id in the dump schema
  std::string author;
  std::string body;
  std::int64_t created_utc = 0;
  std::string subreddit;

  // Deleted authors stay in trees but can never be matched as the hater.
  bool deleted_author() const { return author == kDeletedAuthor; }

  bool operator==(const Comment&) const = default;
};

struct ParseError {
  std::size_t line = 0;  // 1-based
  std::string reason;

  bool operator==(const ParseError&) const = default;
};

struct ParseResult {
  std::vector<Comment> comments;
  std::vector<ParseError> errors;
};

enum class ParseMode { strict, lenient };

/// Reads newline-delimited JSON records. Blank lines are skipped. In strict
/// mode the first malformed line throws (ErrorKind::parse) with its line
/// number; in lenient mode malformed lines are collected and skipped.
ParseResult parse_dump(std::istream& in, ParseMode mode);
ParseResult parse_dump_file(const std::filesystem::path& path, ParseMode mode);

Comment comment_from_json(const nlohmann::json& record);
nlohmann::json comment_to_json(const Comment& comment);

/// Drops a Reddit kind prefix ("t1_", "t3_") if present.
std::string_view strip_kind_prefix(std::string_view id);

enum class OrphanPolicy { drop, promote_to_root };

struct OrphanReport {
  std::string comment_id;
  std::string missing_parent;
  std::string reason;
};

/// A thread rooted at a top-level comment. Node ids are the comment ids with
/// any kind prefix stripped. Child lists are ordered by (created_utc, id).
class DialogueTree {
 public:
  const std::string& thread_id() const { return thread_id_; }
  const Comment& root() const { return nodes_.front(); }
  const std::string& root_id() const { return keys_.front(); }

  std::size_t size() const { return nodes_.size(); }
  std::size_t depth() const;

  bool contains(std::string_view id) const;
  const Comment& at(std::string_view id) const;
  std::optional<std::string> parent(std::string_view id) const;
  std::vector<std::string> children(std::string_view id) const;

  /// Every comment strictly below `id`, preorder.
  std::vector<const Comment*> descendants(std::string_view id) const;

  /// Nodes in preorder (root first).
  const std::vector<Comment>& comments() const { return nodes_; }
  std::vector<std::pair<std::string, std::string>> edges() const;

 private:
  friend struct TreeBuilder;

  std::size_t index_of(std::string_view id) const;
  void collect(std::size_t at, std::vector<const Comment*>& out) const;

  std::string thread_id_;
  std::vector<Comment> nodes_;
  std::vector<std::string> keys_;
  std::vector<std::size_t> parent_;  // parent_[0] unused
  std::vector<std::vector<std::size_t>> children_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct Forest {
  std::vector<DialogueTree> trees;
  std::vector<OrphanReport> orphans;
};

/// Groups comments into trees. Duplicate ids and parent cycles throw
/// ErrorKind::inconsistency. Trees come back ordered by (thread_id, root id).
Forest build_trees(const std::vector<Comment>& comments, OrphanPolicy policy);

nlohmann::json tree_to_json(const DialogueTree& tree);
DialogueTree tree_from_json(const nlohmann::json& record);

std::vector<DialogueTree> read_trees_file(const std::filesystem::path& path);

}  // namespace reentry
