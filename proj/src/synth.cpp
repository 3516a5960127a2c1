#include "reentry/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>

#include "reentry/classify.hpp"
#include "reentry/error.hpp"
#include "reentry/forecast.hpp"
#include "shuffle.hpp"

namespace reentry {

using nlohmann::json;

namespace {

Lexicon make_lexicon(std::string name, std::vector<std::string> entries) {
  std::sort(entries.begin(), entries.end());
  entries.erase(std::unique(entries.begin(), entries.end()), entries.end());
  return Lexicon{std::move(name), MatchMode::exact, std::move(entries)};
}

}  // namespace

std::vector<Lexicon> demo_lexicons() {
  return {
      make_lexicon("abstract", {"idea", "concept", "theory", "notion", "principle", "meaning"}),
      make_lexicon("aggression", {"fight", "attack", "destroy", "punch", "smash", "crush", "beat", "hurt"}),
      make_lexicon("causation", {"because", "therefore", "cause", "since", "hence", "reason"}),
      make_lexicon("enlightenment", {"learn", "understand", "realize", "insight", "discover", "aware"}),
      make_lexicon("exclamation", {"wow", "oh", "hey", "ugh", "whoa", "yay"}),
      make_lexicon("fear", {"afraid", "scared", "fear", "terrified", "worry", "panic"}),
      make_lexicon("forgiveness", {"forgive", "sorry", "apologize", "pardon", "mercy"}),
      make_lexicon("format", {"lol", "lmao", "tbh", "imo", "edit"}),
      make_lexicon("longing", {"wish", "miss", "yearn", "longing", "someday", "dream"}),
      make_lexicon("negative", {"bad", "awful", "terrible", "horrible", "sad", "ugly", "worse"}),
      make_lexicon("polarity", {"always", "never", "everyone", "nobody", "all", "none"}),
      make_lexicon("positive", {"good", "great", "happy", "nice", "wonderful", "glad", "lovely", "enjoy"}),
      make_lexicon("power", {"power", "control", "authority", "dominate", "strong", "force"}),
      make_lexicon("respect", {"respect", "honor", "dignity", "courtesy", "decent", "polite"}),
      make_lexicon("second_person", {"you", "your", "yours", "yourself", "u", "ya"}),
      make_lexicon("uncertainty", {"maybe", "perhaps", "possibly", "unsure", "guess", "probably", "might"}),
      make_lexicon("valence", {"pleasant", "pleasure", "delight", "joy", "misery", "pain"}),
      make_lexicon("worship", {"pray", "god", "faith", "church", "holy", "worship"}),
  };
}

std::vector<Lexicon> synthetic_hate_lexicons() {
  return {make_lexicon("hate_a", {"vermin", "scum", "subhuman", "filth"}),
          make_lexicon("hate_b", {"scum", "vermin", "degenerate", "trash"}),
          make_lexicon("hate_c", {"vermin", "subhuman", "degenerate", "parasite"})};
}

std::vector<Lexicon> synthetic_counter_lexicons() {
  return {make_lexicon("counter_a", {"wrong", "disagree", "unfair", "evidence"}),
          make_lexicon("counter_b", {"wrong", "evidence", "false", "untrue"}),
          make_lexicon("counter_c", {"wrong", "evidence", "prejudice", "unfair"})};
}

namespace {

// Text pools. Hate texts carry one word all three hate lexicons share; counter
// cores carry two words all three counter lexicons share. Neither pool uses
// words from the analysis categories' marker sets.
const std::vector<std::string> kHateTexts{
    "those people are vermin and should leave",
    "vermin like them ruin every single thread",
    "that whole crowd is vermin honestly",
    "they are vermin and everybody knows it",
    "typical vermin posting the usual nonsense here",
};
const std::vector<std::string> kHatefulReentries{
    "shut up you vermin",
    "nobody asked you vermin",
    "go away vermin",
};
const std::vector<std::string> kNeutralReentries{
    "ok fair point i will think about it",
    "alright i hear what you are saying",
    "thanks for the reply i suppose",
    "noted and i will read more on this",
};
const std::vector<std::string> kCounterCores{
    "that is wrong and there is no evidence for it",
    "this is wrong and the evidence says otherwise",
    "wrong take with zero evidence behind it",
    "you are wrong and the evidence is clear",
};
const std::vector<std::string> kOutcomeMarkers[3]{
    // no_reentry -> positive
    {"have a great day", "glad we could talk", "enjoy the nice weather", "hope things get happy"},
    // hateful -> aggression
    {"stop trying to fight and attack people", "you just want to destroy and crush", "all you do is punch and smash",
     "beat it before you hurt someone"},
    // non_hateful -> respect / longing
    {"show some respect and dignity", "i wish you could see some honor here", "be decent and polite someday",
     "i miss when people had courtesy"},
};
const std::vector<std::string> kNeutralTails{"read a book on it", "look it up first", "check the sources", "think it over"};
const std::vector<std::string> kFollowUps{
    "this thread is a mess", "agreed with the above", "can someone link the source", "interesting discussion here",
    "what did they say originally",
};
const std::vector<std::string> kNeutralRoots{
    "what time does the match start", "anyone tried the new update", "posting this for the weekly thread",
    "the new patch notes are out",
};
const std::vector<std::string> kSubreddits{"changemyview", "KotakuInAction", "MensRights", "DankMemes", "worldnews",
                                           "smallknitting"};

class Generator {
 public:
  explicit Generator(const SynthOptions& options) : options_(options), rng_(options.seed) {}

  SynthCorpus run() {
    std::vector<Outcome> plan = outcome_plan();
    std::size_t next = 0;
    while (next < plan.size()) {
      const bool twin = plan.size() - next >= 2 && chance(0.15);
      main_thread(plan, next, twin ? 2 : 1);
      next += twin ? 2 : 1;
    }
    for (std::size_t i = 0; i < options_.distractor_threads; ++i) distractor_thread(i % 7);
    detail::seeded_shuffle(corpus_.comments, rng_);
    return std::move(corpus_);
  }

 private:
  std::uint64_t index(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t draw;
    do {
      draw = rng_();
    } while (draw >= limit);
    return draw % bound;
  }
  bool chance(double p) { return static_cast<double>(rng_() >> 11) * 0x1.0p-53 < p; }
  const std::string& pick(const std::vector<std::string>& pool) { return pool[index(pool.size())]; }

  std::vector<Outcome> outcome_plan() {
    const std::size_t n = options_.pairs;
    const auto share = [&](double f) { return static_cast<std::size_t>(static_cast<double>(n) * f + 0.5); };
    const std::size_t hateful = share(0.20);
    const std::size_t no_reentry = std::min(n - hateful, share(0.33));
    std::vector<Outcome> plan(n, Outcome::non_hateful);
    std::fill(plan.begin(), plan.begin() + static_cast<std::ptrdiff_t>(hateful), Outcome::hateful);
    std::fill(plan.begin() + static_cast<std::ptrdiff_t>(hateful),
              plan.begin() + static_cast<std::ptrdiff_t>(hateful + no_reentry), Outcome::no_reentry);
    detail::seeded_shuffle(plan, rng_);
    return plan;
  }

  std::string new_author() { return "user" + std::to_string(1000 + index(90000)); }

  std::vector<std::string> distinct_authors(std::size_t k) {
    std::vector<std::string> out;
    while (out.size() < k) {
      std::string a = new_author();
      if (std::find(out.begin(), out.end(), a) == out.end()) out.push_back(std::move(a));
    }
    return out;
  }

  std::string new_thread() {
    ++thread_counter_;
    thread_time_ = 1600000000 + static_cast<std::int64_t>(thread_counter_) * 7200;
    subreddit_ = pick(kSubreddits);
    char buf[32];
    std::snprintf(buf, sizeof buf, "t3_th%05zu", thread_counter_);
    return buf;
  }

  // Adds a comment; `parent` is a bare id or empty for a top-level comment.
  std::string add(const std::string& thread, const std::string& parent, const std::string& author,
                  std::string body, std::int64_t offset) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "c%06zu", ++comment_counter_);
    Comment c;
    c.id = buf;
    c.parent_id = parent.empty() ? thread : "t1_" + parent;
    c.thread_id = thread;
    c.author = author;
    c.body = std::move(body);
    c.created_utc = thread_time_ + offset;
    c.subreddit = subreddit_;
    corpus_.comments.push_back(std::move(c));
    return buf;
  }

  std::string counter_text(Outcome outcome) {
    std::string text = pick(kCounterCores);
    text += ". ";
    text += chance(options_.signal) ? pick(kOutcomeMarkers[to_index(outcome)]) : pick(kNeutralTails);
    return text;
  }

  void main_thread(const std::vector<Outcome>& plan, std::size_t first, std::size_t branches) {
    const std::string thread = new_thread();
    const auto people = distinct_authors(1 + 2 * branches);
    const std::string& hater = people[0];
    const std::string hs = add(thread, "", hater, pick(kHateTexts), 0);
    for (std::size_t b = 0; b < branches; ++b) {
      const Outcome outcome = plan[first + b];
      const std::int64_t t0 = static_cast<std::int64_t>(b) * 600;
      const std::string cs = add(thread, hs, people[1 + 2 * b], counter_text(outcome), t0 + 60);
      const std::string follow = add(thread, cs, people[2 + 2 * b], pick(kFollowUps), t0 + 120);
      corpus_.expected[hs + ":" + cs] = outcome;
      if (outcome == Outcome::no_reentry) {
        // The hater may still talk elsewhere in the thread, outside this branch.
        if (chance(0.3)) add(thread, hs, hater, pick(kNeutralReentries), t0 + 200);
        continue;
      }
      const bool hateful = outcome == Outcome::hateful;
      const std::string& first_text = hateful ? pick(kHatefulReentries) : pick(kNeutralReentries);
      const std::string parent = chance(0.5) ? follow : cs;
      // Sometimes a later reentry of the opposite kind follows; only the
      // earliest one decides the outcome.
      add(thread, parent, hater, first_text, t0 + 300);
      if (chance(0.25)) {
        add(thread, follow, hater, hateful ? pick(kNeutralReentries) : pick(kHatefulReentries), t0 + 400);
      }
    }
  }

  void distractor_thread(std::size_t kind) {
    const std::string thread = new_thread();
    const auto people = distinct_authors(3);
    switch (kind) {
      case 0: {  // not hate speech at the root
        const std::string root = add(thread, "", people[0], pick(kNeutralRoots), 0);
        const std::string cs = add(thread, root, people[1], counter_text(Outcome::no_reentry), 60);
        add(thread, cs, people[2], pick(kFollowUps), 120);
        break;
      }
      case 1: {  // counterspeech nobody answered
        const std::string hs = add(thread, "", people[0], pick(kHateTexts), 0);
        add(thread, hs, people[1], counter_text(Outcome::no_reentry), 60);
        break;
      }
      case 2: {  // the hater answering themself
        const std::string hs = add(thread, "", people[0], pick(kHateTexts), 0);
        const std::string self = add(thread, hs, people[0], counter_text(Outcome::non_hateful), 60);
        add(thread, self, people[2], pick(kFollowUps), 120);
        break;
      }
      case 3: {  // deleted hater
        const std::string hs = add(thread, "", "[deleted]", pick(kHateTexts), 0);
        const std::string cs = add(thread, hs, people[1], counter_text(Outcome::no_reentry), 60);
        add(thread, cs, people[2], pick(kFollowUps), 120);
        break;
      }
      case 4: {  // parent missing from the dump
        char missing[32];
        std::snprintf(missing, sizeof missing, "gone%05zu", thread_counter_);
        const std::string orphan = add(thread, missing, people[0], pick(kHateTexts), 0);
        const std::string child = add(thread, orphan, people[1], counter_text(Outcome::hateful), 60);
        add(thread, child, people[2], pick(kFollowUps), 120);
        break;
      }
      case 5: {  // only one hate detector fires
        const std::string root = add(thread, "", people[0], "what total trash that take was", 0);
        const std::string cs = add(thread, root, people[1], counter_text(Outcome::hateful), 60);
        add(thread, cs, people[2], pick(kFollowUps), 120);
        break;
      }
      default: {  // a reply without counterspeech markers
        const std::string hs = add(thread, "", people[0], pick(kHateTexts), 0);
        const std::string reply = add(thread, hs, people[1], "lol ok whatever you say buddy", 60);
        add(thread, reply, people[2], pick(kFollowUps), 120);
        add(thread, reply, people[0], pick(kHatefulReentries), 180);
        break;
      }
    }
  }

  SynthOptions options_;
  std::mt19937_64 rng_;
  SynthCorpus corpus_;
  std::size_t thread_counter_ = 0;
  std::size_t comment_counter_ = 0;
  std::int64_t thread_time_ = 0;
  std::string subreddit_;
};

void write_json_file(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

json member_spec(Task task, const std::string& lexicon_path, double threshold) {
  return {{"kind", "lexicon"},
          {"task", to_string(task)},
          {"parameters", {{"lexicon", lexicon_path}, {"threshold", threshold}}}};
}

}  // namespace

SynthCorpus generate_synthetic(const SynthOptions& options) {
  if (options.pairs == 0) fail(ErrorKind::invalid_argument, "synthetic corpus needs at least one pair");
  if (!(options.signal >= 0.0 && options.signal <= 1.0)) {
    fail(ErrorKind::invalid_argument, "signal must lie in [0, 1]");
  }
  return Generator(options).run();
}

void write_synthetic_bundle(const std::filesystem::path& dir, const SynthOptions& options) {
  namespace fs = std::filesystem;
  const SynthCorpus corpus = generate_synthetic(options);
  std::error_code ec;
  fs::create_directories(dir / "lexicons", ec);
  fs::create_directories(dir / "members", ec);
  if (ec) fail(ErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());

  {
    std::ofstream out(dir / "dump.jsonl", std::ios::binary);
    if (!out) fail(ErrorKind::io, "cannot write " + (dir / "dump.jsonl").string());
    for (std::size_t i = 0; i < corpus.comments.size(); ++i) {
      out << comment_to_json(corpus.comments[i]).dump() << '\n';
      // Real dumps carry the odd damaged line.
      if (i == corpus.comments.size() / 3) out << "{\"id\": \"broken\", \"body\": \n";
    }
  }
  for (const Lexicon& lex : demo_lexicons()) write_json_file(dir / "lexicons" / (lex.name + ".json"), lexicon_to_json(lex));

  json hate = json::array(), counter = json::array();
  for (const Lexicon& lex : synthetic_hate_lexicons()) {
    write_json_file(dir / "members" / (lex.name + ".json"), lexicon_to_json(lex));
    hate.push_back(member_spec(Task::hate, "members/" + lex.name + ".json", 0.1));
  }
  for (const Lexicon& lex : synthetic_counter_lexicons()) {
    write_json_file(dir / "members" / (lex.name + ".json"), lexicon_to_json(lex));
    counter.push_back(member_spec(Task::counter, "members/" + lex.name + ".json", 0.1));
  }

  {
    std::ofstream out(dir / "expected.jsonl", std::ios::binary);
    if (!out) fail(ErrorKind::io, "cannot write " + (dir / "expected.jsonl").string());
    for (const auto& [pair_id, outcome] : corpus.expected) {
      out << json{{"pair_id", pair_id}, {"outcome", to_string(outcome)}}.dump() << '\n';
    }
  }

  const json config{
      {"paths", {{"input_dump", "dump.jsonl"}, {"lexicon_dir", "lexicons"}, {"output_dir", "out"}}},
      {"ingest", {{"mode", "lenient"}, {"orphan_policy", "drop"}, {"anonymize", true}, {"salt", "synthetic"}}},
      {"classifiers",
       {{"hate", hate},
        {"counter", counter},
        {"predict", {{"kind", "ngram"}, {"parameters", {{"hyper", NgramHyper{}.to_json()}}}}}}},
      {"consensus_size", 3},
      {"split", {{"ratio", 0.8}, {"seed", 13}, {"stratified", false}}},
      {"separator", std::string(kDefaultSeparator)},
      {"variant", "pair"},
      {"analysis", {{"alpha", 0.05}, {"basis", "mean"}, {"by_community", true}}},
      {"jobs", 1},
  };
  write_json_file(dir / "config.json", config);
}

}  // namespace reentry
