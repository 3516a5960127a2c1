#include "reentry/lexicon.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "reentry/error.hpp"
#include "reentry/text.hpp"

namespace reentry {

using nlohmann::json;

bool Lexicon::matches(std::string_view token) const {
  if (match_mode == MatchMode::exact) {
    return std::binary_search(entries.begin(), entries.end(), token);
  }
  // Entries are sorted, so any prefix of `token` sorts at or before it.
  auto it = std::upper_bound(entries.begin(), entries.end(), token);
  while (it != entries.begin()) {
    --it;
    if (token.substr(0, it->size()) == *it) return true;
    if (it->empty() || (*it)[0] != token[0]) break;
  }
  return false;
}

std::size_t Lexicon::count_matches(const std::vector<std::string>& tokens) const {
  return static_cast<std::size_t>(
      std::count_if(tokens.begin(), tokens.end(), [this](const std::string& t) { return matches(t); }));
}

Lexicon lexicon_from_json(const json& doc) {
  if (!doc.is_object()) fail(ErrorKind::config, "lexicon: expected a JSON object");
  Lexicon lex;
  if (!doc.contains("name") || !doc["name"].is_string() || doc["name"].get<std::string>().empty()) {
    fail(ErrorKind::config, "lexicon.name: missing or empty");
  }
  lex.name = doc["name"].get<std::string>();
  const std::string mode = doc.value("match_mode", std::string("exact"));
  if (mode == "exact") {
    lex.match_mode = MatchMode::exact;
  } else if (mode == "prefix") {
    lex.match_mode = MatchMode::prefix;
  } else {
    fail(ErrorKind::config, "lexicon " + lex.name + ".match_mode: expected exact or prefix");
  }
  if (!doc.contains("entries") || !doc["entries"].is_array()) {
    fail(ErrorKind::config, "lexicon " + lex.name + ".entries: missing");
  }
  std::set<std::string> entries;
  for (const json& e : doc["entries"]) {
    if (!e.is_string()) fail(ErrorKind::config, "lexicon " + lex.name + ".entries: non-string entry");
    // Entries go through the tokenizer so they compare like text tokens.
    for (std::string& t : tokenize(e.get<std::string>())) entries.insert(std::move(t));
  }
  if (entries.empty()) fail(ErrorKind::config, "lexicon " + lex.name + ".entries: empty");
  lex.entries.assign(entries.begin(), entries.end());
  return lex;
}

json lexicon_to_json(const Lexicon& lexicon) {
  return json{{"name", lexicon.name},
              {"match_mode", lexicon.match_mode == MatchMode::exact ? "exact" : "prefix"},
              {"entries", lexicon.entries}};
}

Lexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::config, "cannot open lexicon " + path.string());
  const json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) fail(ErrorKind::config, "lexicon " + path.string() + ": malformed JSON");
  return lexicon_from_json(doc);
}

std::vector<Lexicon> load_lexicon_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    fail(ErrorKind::config, "lexicon directory " + dir.string() + " does not exist");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Lexicon> out;
  std::set<std::string> names;
  for (const auto& f : files) {
    Lexicon lex = load_lexicon(f);
    if (!names.insert(lex.name).second) {
      fail(ErrorKind::config, "duplicate lexicon name " + lex.name + " in " + dir.string());
    }
    out.push_back(std::move(lex));
  }
  if (out.empty()) fail(ErrorKind::config, "no lexicons found in " + dir.string());
  return out;
}

}  // namespace reentry
