#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "reentry/ingest.hpp"
#include "reentry/lexicon.hpp"
#include "reentry/outcomes.hpp"

namespace reentry {

/// Demonstration word lists, one per linguistic category.
std::vector<Lexicon> demo_lexicons();

struct SynthOptions {
  std::size_t pairs = 2000;
  std::uint64_t seed = 20240611;
  // Chance that a counterspeech carries its outcome's marker category.
  double signal = 0.8;
  // Threads that never produce a qualifying pair.
  std::size_t distractor_threads = 200;
};

struct SynthCorpus {
  std::vector<Comment> comments;
  // "<hs id>:<cs id>" -> planted outcome
  std::map<std::string, Outcome> expected;
};

/// Builds a dump whose hate and counterspeech comments are recognisable by
/// the member lexicons written by write_synthetic_bundle, and whose
/// counterspeech carries outcome-specific category words:
///   hateful reentry -> aggression, non-hateful -> respect/longing,
///   no reentry -> positive.
SynthCorpus generate_synthetic(const SynthOptions& options);

/// Writes dump.jsonl, member lexicons, analysis lexicons, expected.jsonl and
/// config.json (output_dir = <dir>/out) into `dir`.
void write_synthetic_bundle(const std::filesystem::path& dir, const SynthOptions& options);

/// The three hate lexicons and three counterspeech lexicons the bundle uses.
std::vector<Lexicon> synthetic_hate_lexicons();
std::vector<Lexicon> synthetic_counter_lexicons();

}  // namespace reentry
