#include "reentry/text.hpp"

#include <array>
#include <cctype>
#include <memory>

#include <openssl/evp.h>
#include <unicode/brkiter.h>
#include <unicode/locid.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "reentry/error.hpp"

namespace reentry {

namespace {

icu::BreakIterator& word_iterator() {
  thread_local std::unique_ptr<icu::BreakIterator> it = [] {
    UErrorCode status = U_ZERO_ERROR;
    std::unique_ptr<icu::BreakIterator> created(
        icu::BreakIterator::createWordInstance(icu::Locale::getRoot(), status));
    if (U_FAILURE(status) || !created) {
      fail(ErrorKind::internal, std::string("ICU word break iterator: ") + u_errorName(status));
    }
    return created;
  }();
  return *it;
}

bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_' || c == '-';
}

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

bool starts_with_icase(std::string_view text, std::size_t at, std::string_view prefix) {
  if (text.size() - at < prefix.size()) return false;
  for (std::size_t k = 0; k < prefix.size(); ++k) {
    if (std::tolower(static_cast<unsigned char>(text[at + k])) != prefix[k]) return false;
  }
  return true;
}

// Length of a URL starting at `at`, or 0.
std::size_t url_length(std::string_view text, std::size_t at) {
  std::size_t scheme = 0;
  if (starts_with_icase(text, at, "https://")) {
    scheme = 8;
  } else if (starts_with_icase(text, at, "http://")) {
    scheme = 7;
  } else if (starts_with_icase(text, at, "www.")) {
    scheme = 4;
  } else {
    return 0;
  }
  std::size_t end = at + scheme;
  while (end < text.size()) {
    const char c = text[end];
    if (std::isspace(static_cast<unsigned char>(c)) || c == '<' || c == '>' || c == '"') break;
    ++end;
  }
  constexpr std::string_view trailing = ".,;:!?)]}'";
  while (end > at + scheme && trailing.find(text[end - 1]) != std::string_view::npos) --end;
  return end > at + scheme ? end - at : 0;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  if (text.empty()) return tokens;

  const icu::UnicodeString source =
      icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  icu::BreakIterator& it = word_iterator();
  it.setText(source);

  int32_t start = it.first();
  for (int32_t end = it.next(); end != icu::BreakIterator::DONE; start = end, end = it.next()) {
    if (it.getRuleStatus() < UBRK_WORD_NONE_LIMIT) continue;  // spaces, punctuation
    icu::UnicodeString word;
    for (int32_t i = start; i < end;) {
      const UChar32 cp = source.char32At(i);
      if (!u_ispunct(cp)) word.append(cp);
      i += U16_LENGTH(cp);
    }
    if (word.isEmpty()) continue;
    word.toLower(icu::Locale::getRoot());
    std::string utf8;
    word.toUTF8String(utf8);
    tokens.push_back(std::move(utf8));
  }
  return tokens;
}

std::string mask_pii(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    // Judge boundaries on the output so far: replacements create boundaries
    // a second pass would otherwise see, breaking idempotence.
    const char prev = out.empty() ? ' ' : out.back();
    if (!is_alnum(prev) && prev != '_') {
      if (const std::size_t n = url_length(text, i); n > 0) {
        out += "[URL]";
        i += n;
        continue;
      }
      // "/u/NAME" or "u/NAME"
      std::size_t name_at = 0;
      if (text.compare(i, 3, "/u/") == 0 && prev != '/') {
        name_at = i + 3;
      } else if (text.compare(i, 2, "u/") == 0 && prev != '/') {
        name_at = i + 2;
      }
      if (name_at != 0) {
        std::size_t end = name_at;
        while (end < text.size() && is_name_char(text[end])) ++end;
        if (end > name_at) {
          out += "u/[USER]";
          i = end;
          continue;
        }
      }
    }
    out += text[i];
    ++i;
  }
  return out;
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1) {
    fail(ErrorKind::internal, "sha256 digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int k = 0; k < length; ++k) {
    out += hex[digest[k] >> 4];
    out += hex[digest[k] & 0x0f];
  }
  return out;
}

std::string pseudonymize_author(std::string_view author, std::string_view salt) {
  if (author == "[deleted]") return std::string(author);
  std::string material(salt);
  material += '\x1f';
  material += author;
  return "user_" + sha256_hex(material).substr(0, 12);
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace reentry
