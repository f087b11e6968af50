#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pmsys::lexicon {

struct TokenizedText {
  std::vector<std::string> tokens;
  std::size_t sentence_count = 0;
};

/// Lowercases ASCII letters and splits on every run of characters that are not
/// ASCII alphanumerics. Bytes >= 0x80 are kept as word characters so UTF-8
/// words survive intact. A sentence is closed by a run of '.', '!' or '?'
/// that follows at least one token; trailing unterminated words count as one
/// more sentence.
TokenizedText tokenize(std::string_view text);

struct Entry {
  std::string pattern;  // lowercase; a trailing '*' marks a stem
  std::vector<std::string> categories;
};

/// Closed-vocabulary dictionary: exact words and wildcard stems mapped to
/// category sets. Immutable after construction.
class Lexicon {
 public:
  /// Validates every invariant; throws ValidationError naming the offending pattern.
  Lexicon(std::string name, std::vector<std::string> categories, std::vector<Entry> entries);

  const std::string& name() const noexcept { return name_; }
  const std::vector<std::string>& categories() const noexcept { return categories_; }
  const std::vector<Entry>& entries() const noexcept { return entries_; }

  /// Sorted, de-duplicated category indices hit by one token.
  std::vector<std::size_t> match(std::string_view token) const;

 private:
  std::string name_;
  std::vector<std::string> categories_;
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::vector<std::size_t>> exact_;
  std::unordered_map<std::string, std::vector<std::size_t>> stems_;
  std::size_t longest_stem_ = 0;
};

/// Throws ValidationError if the pattern breaks a lexicon invariant.
void validate_pattern(std::string_view pattern);

struct TextStats {
  std::size_t word_count = 0;      // WC
  double words_per_sentence = 0;   // WPS
  double unique_pct = 0;           // UNIQUE
  double six_letter_pct = 0;       // SIXLTR
};

using CategoryProfile = std::map<std::string, double>;

struct Analysis {
  TextStats stats;
  CategoryProfile profile;
};

Analysis analyze(std::string_view text, const Lexicon& lexicon);

/// Header "%categories: a,b,c", then "pattern cat1[,cat2]" lines; '#' starts a comment.
Lexicon parse_lexicon(std::istream& in, std::string name);
Lexicon load_lexicon(const std::filesystem::path& path);

}  // namespace pmsys::lexicon
