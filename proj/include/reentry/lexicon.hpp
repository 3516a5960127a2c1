#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace reentry {

enum class MatchMode { exact, prefix };

/// One named word category. Entries are lowercase words (exact mode) or
/// stems (prefix mode).
struct Lexicon {
  std::string name;
  MatchMode match_mode = MatchMode::exact;
  std::vector<std::string> entries;  // sorted, unique

  bool matches(std::string_view token) const;
  std::size_t count_matches(const std::vector<std::string>& tokens) const;
};

Lexicon lexicon_from_json(const nlohmann::json& doc);
nlohmann::json lexicon_to_json(const Lexicon& lexicon);
Lexicon load_lexicon(const std::filesystem::path& path);

/// Loads every *.json file in `dir`, ordered by file name. Names must be unique.
std::vector<Lexicon> load_lexicon_dir(const std::filesystem::path& dir);

}  // namespace reentry
