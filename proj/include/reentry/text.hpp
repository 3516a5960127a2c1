#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace reentry {

/// Unicode word segmentation (UAX #29), lowercased, punctuation and
/// whitespace segments dropped. Shared by the lexicon and n-gram paths so
/// both see identical tokens.
std::vector<std::string> tokenize(std::string_view text);

/// Replaces user mentions ("u/NAME", "/u/NAME") with "u/[USER]" and URLs
/// with "[URL]". Everything else is copied byte for byte. Idempotent.
std::string mask_pii(std::string_view text);

/// Stable pseudonym for an author name; "[deleted]" passes through.
std::string pseudonymize_author(std::string_view author, std::string_view salt);

/// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

/// 64-bit FNV-1a; stable across runs and platforms.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace reentry
