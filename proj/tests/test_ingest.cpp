#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "reentry/error.hpp"
#include "reentry/ingest.hpp"
#include "test_support.hpp"

using namespace reentry;

namespace {

Comment make(std::string id, std::optional<std::string> parent, std::string thread = "t3_p", std::int64_t t = 0,
             std::string author = "a") {
  Comment c;
  c.id = std::move(id);
  c.parent_id = std::move(parent);
  c.thread_id = std::move(thread);
  c.author = std::move(author);
  c.body = "text";
  c.created_utc = t;
  return c;
}

ParseResult parse(const std::string& text, ParseMode mode = ParseMode::lenient) {
  std::istringstream in(text);
  return parse_dump(in, mode);
}

}  // namespace

TEST(ParseDump, MinimalRecord) {
  const auto r = parse(R"({"id":"c1","link_id":"t3_x","author":"a","created_utc":5})");
  ASSERT_EQ(r.comments.size(), 1u);
  EXPECT_TRUE(r.errors.empty());
  EXPECT_EQ(r.comments[0].id, "c1");
  EXPECT_FALSE(r.comments[0].parent_id.has_value());
  EXPECT_EQ(r.comments[0].body, "");
}

TEST(ParseDump, MalformedLineLenient) {
  const auto r = parse("not json\n");
  EXPECT_TRUE(r.comments.empty());
  ASSERT_EQ(r.errors.size(), 1u);
  EXPECT_EQ(r.errors[0].line, 1u);
}

TEST(ParseDump, MalformedLineStrictIsFatal) {
  try {
    parse("{\"id\":\"c1\",\"link_id\":\"t3_x\",\"author\":\"a\",\"created_utc\":1}\nnot json\n", ParseMode::strict);
    FAIL() << "expected a parse error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::parse);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(ParseDump, FiveLineFixtureMatchesHandWrittenList) {
  const auto r = parse_dump_file(testkit::data_dir() / "five_lines.jsonl", ParseMode::lenient);
  std::vector<Comment> expected{
      {"c1", "t3_p1", "t3_p1", "ann", "first", 100, "changemyview"},
      {"c2", "t1_c1", "t3_p1", "bob", "second", 110, "changemyview"},
      {"c4", std::nullopt, "t3_p2", "dan", "", 130, ""},
      {"c5", "t1_c4", "t3_p2", "[deleted]", "gone", 140, "DotA2"},
  };
  EXPECT_EQ(r.comments, expected);
  ASSERT_EQ(r.errors.size(), 1u);
  EXPECT_EQ(r.errors[0].line, 3u);
  EXPECT_NE(r.errors[0].reason.find("\"id\""), std::string::npos);
}

TEST(ParseDump, RejectsBadFieldTypes) {
  const auto r = parse(
      "{\"id\":\"c1\",\"link_id\":\"t3_x\",\"author\":\"a\",\"created_utc\":-1}\n"
      "{\"id\":\"c2\",\"link_id\":\"t3_x\",\"author\":\"a\",\"created_utc\":\"soon\"}\n"
      "{\"id\":\"\",\"link_id\":\"t3_x\",\"author\":\"a\",\"created_utc\":1}\n"
      "[1,2]\n"
      "\n");
  EXPECT_TRUE(r.comments.empty());
  EXPECT_EQ(r.errors.size(), 4u);
}

TEST(ParseDump, UnreadableFileIsIoError) {
  try {
    parse_dump_file("/nonexistent/dump.jsonl", ParseMode::lenient);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::io);
  }
}

TEST(ParseDump, RoundTripThroughDumpSchema) {
  const auto first = parse_dump_file(testkit::data_dir() / "five_lines.jsonl", ParseMode::lenient);
  std::string text;
  for (const auto& c : first.comments) text += comment_to_json(c).dump() + "\n";
  const auto second = parse(text, ParseMode::strict);
  EXPECT_EQ(second.comments, first.comments);
}

TEST(BuildTrees, Chain) {
  const Forest f = build_trees({make("A", std::nullopt), make("B", "t1_A", "t3_p", 1), make("C", "t1_B", "t3_p", 2)},
                               OrphanPolicy::drop);
  ASSERT_EQ(f.trees.size(), 1u);
  const auto& t = f.trees[0];
  EXPECT_EQ(t.depth(), 3u);
  EXPECT_EQ(t.children("A"), std::vector<std::string>{"B"});
  EXPECT_EQ(t.children("B"), std::vector<std::string>{"C"});
  EXPECT_TRUE(f.orphans.empty());
}

TEST(BuildTrees, DropsOrphanAndReportsIt) {
  const Forest f = build_trees({make("A", std::nullopt), make("D", "t1_missing")}, OrphanPolicy::drop);
  ASSERT_EQ(f.trees.size(), 1u);
  EXPECT_EQ(f.trees[0].size(), 1u);
  ASSERT_EQ(f.orphans.size(), 1u);
  EXPECT_EQ(f.orphans[0].comment_id, "D");
  EXPECT_EQ(f.orphans[0].missing_parent, "t1_missing");
}

TEST(BuildTrees, PromotesOrphanWhenAsked) {
  const Forest f = build_trees({make("A", std::nullopt), make("D", "t1_missing"), make("E", "t1_D", "t3_p", 3)},
                               OrphanPolicy::promote_to_root);
  ASSERT_EQ(f.trees.size(), 2u);
  EXPECT_EQ(f.orphans.size(), 1u);
  std::size_t total = 0;
  for (const auto& t : f.trees) total += t.size();
  EXPECT_EQ(total, 3u);
}

TEST(BuildTrees, CrossThreadParentIsOrphan) {
  const Forest f = build_trees({make("A", std::nullopt, "t3_p"), make("B", "t1_A", "t3_q")}, OrphanPolicy::drop);
  ASSERT_EQ(f.orphans.size(), 1u);
  EXPECT_EQ(f.orphans[0].comment_id, "B");
}

TEST(BuildTrees, ChildrenSortedByTimeThenId) {
  const Forest f = build_trees({make("R", std::nullopt), make("z", "t1_R", "t3_p", 5), make("b", "t1_R", "t3_p", 5),
                                make("a", "t1_R", "t3_p", 9), make("m", "t1_R", "t3_p", 1)},
                               OrphanPolicy::drop);
  EXPECT_EQ(f.trees[0].children("R"), (std::vector<std::string>{"m", "b", "z", "a"}));
}

TEST(BuildTrees, CommentIdEqualToThreadIdStillParents) {
  const auto f = build_trees({make("p", "t3_p"), make("c", "t1_p", "t3_p", 1), make("r", "p", "t3_p", 2)},
                             OrphanPolicy::drop);
  ASSERT_EQ(f.trees.size(), 2u);
  EXPECT_EQ(f.trees[0].size(), 2u);
  EXPECT_EQ(f.trees[0].parent("c"), "p");
  EXPECT_EQ(f.trees[1].size(), 1u);
}

TEST(BuildTrees, DuplicateIdIsFatal) {
  EXPECT_THROW(build_trees({make("A", std::nullopt), make("A", std::nullopt)}, OrphanPolicy::drop), Error);
}

TEST(BuildTrees, CycleIsFatalAndNamesIds) {
  try {
    build_trees({make("R", std::nullopt), make("X", "t1_Y"), make("Y", "t1_X")}, OrphanPolicy::drop);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::inconsistency);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("X"), std::string::npos);
    EXPECT_NE(msg.find("Y"), std::string::npos);
  }
}

namespace {

// Oracle: follow parent links one lookup at a time until a root or a dead end.
struct OracleResult {
  std::map<std::string, std::set<std::string>> trees;  // root id -> members
  std::set<std::string> orphans;
};

OracleResult attach_by_lookup(const std::vector<Comment>& comments) {
  std::map<std::string, const Comment*> by_id;
  for (const auto& c : comments) by_id[c.id] = &c;
  OracleResult out;
  for (const auto& c : comments) {
    const Comment* at = &c;
    bool orphan = false;
    while (true) {
      if (!at->parent_id || at->parent_id->rfind("t3_", 0) == 0) break;
      const auto it = by_id.find(at->parent_id->substr(3));
      if (it == by_id.end() || it->second->thread_id != at->thread_id) {
        orphan = true;
        break;
      }
      at = it->second;
    }
    if (orphan) {
      out.orphans.insert(c.id);
    } else {
      out.trees[at->id].insert(c.id);
    }
  }
  return out;
}

}  // namespace

TEST(BuildTrees, RandomForestsMatchAttachmentOracle) {
  std::mt19937 rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Comment> comments;
    for (int i = 0; i < 50; ++i) {
      const std::string thread = "t3_T" + std::to_string(rng() % 3);
      std::optional<std::string> parent;
      std::vector<std::size_t> same;
      for (std::size_t j = 0; j < comments.size(); ++j) {
        if (comments[j].thread_id == thread) same.push_back(j);
      }
      const unsigned roll = rng() % 100;
      if (roll < 15 || same.empty()) {
        parent = thread;
      } else if (roll < 20) {
        parent = "t1_missing" + std::to_string(rng() % 4);
      } else if (roll < 23 && !comments.empty()) {
        parent = "t1_" + comments[rng() % comments.size()].id;  // possibly another thread
      } else {
        parent = "t1_" + comments[same[rng() % same.size()]].id;
      }
      comments.push_back(make("c" + std::to_string(i), parent, thread, static_cast<std::int64_t>(rng() % 20)));
    }
    std::shuffle(comments.begin(), comments.end(), rng);

    const Forest f = build_trees(comments, OrphanPolicy::drop);
    const OracleResult oracle = attach_by_lookup(comments);

    std::map<std::string, std::set<std::string>> got;
    std::size_t total = 0;
    for (const auto& t : f.trees) {
      total += t.size();
      for (const auto& c : t.comments()) got[t.root_id()].insert(c.id);
      for (std::size_t i = 0; i < t.comments().size(); ++i) {
        // Child lists are sorted by (created_utc, id).
        const auto kids = t.children(t.comments()[i].id);
        for (std::size_t k = 1; k < kids.size(); ++k) {
          const auto& a = t.at(kids[k - 1]);
          const auto& b = t.at(kids[k]);
          ASSERT_TRUE(std::tie(a.created_utc, a.id) < std::tie(b.created_utc, b.id));
        }
      }
    }
    std::set<std::string> orphan_ids;
    for (const auto& o : f.orphans) orphan_ids.insert(o.comment_id);
    ASSERT_EQ(got, oracle.trees) << "trial " << trial;
    ASSERT_EQ(orphan_ids, oracle.orphans) << "trial " << trial;
    ASSERT_EQ(total + f.orphans.size(), comments.size());
  }
}

TEST(BuildTrees, IndependentOfInputOrder) {
  std::vector<Comment> comments{make("R", std::nullopt, "t3_p", 0), make("a", "t1_R", "t3_p", 2),
                                make("b", "t1_R", "t3_p", 1), make("c", "t1_a", "t3_p", 3),
                                make("S", "t3_q", "t3_q", 0)};
  const Forest first = build_trees(comments, OrphanPolicy::drop);
  std::reverse(comments.begin(), comments.end());
  const Forest second = build_trees(comments, OrphanPolicy::drop);
  ASSERT_EQ(first.trees.size(), second.trees.size());
  for (std::size_t i = 0; i < first.trees.size(); ++i) {
    EXPECT_EQ(tree_to_json(first.trees[i]), tree_to_json(second.trees[i]));
  }
}

TEST(TreeJson, RoundTrip) {
  const Forest f = build_trees({make("R", std::nullopt), make("a", "t1_R", "t3_p", 2), make("b", "t1_a", "t3_p", 3)},
                               OrphanPolicy::drop);
  const DialogueTree back = tree_from_json(tree_to_json(f.trees[0]));
  EXPECT_EQ(tree_to_json(back), tree_to_json(f.trees[0]));
  EXPECT_EQ(back.descendants("R").size(), 2u);
}

TEST(TreeJson, RejectsTamperedEdges) {
  const Forest f = build_trees({make("R", std::nullopt), make("a", "t1_R", "t3_p", 2), make("b", "t1_a", "t3_p", 3)},
                               OrphanPolicy::drop);
  auto doc = tree_to_json(f.trees[0]);
  doc["edges"][1] = nlohmann::json::array({"R", "b"});
  EXPECT_THROW(tree_from_json(doc), Error);
}
