#include "pmsys/lexicon.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "pmsys/error.hpp"

namespace pmsys::lexicon {
namespace {

bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

std::size_t utf8_length(std::string_view s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto piece = trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    out.push_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

TokenizedText tokenize(std::string_view text) {
  TokenizedText out;
  std::string current;
  bool open_sentence = false;  // tokens seen since the last boundary
  bool in_terminal_run = false;

  auto flush = [&] {
    if (!current.empty()) {
      out.tokens.push_back(std::move(current));
      current.clear();
      open_sentence = true;
    }
  };

  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_word_byte(c)) {
      in_terminal_run = false;
      current += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch;
      continue;
    }
    flush();
    if (is_terminal(ch)) {
      if (!in_terminal_run && open_sentence) {
        ++out.sentence_count;
        open_sentence = false;
      }
      in_terminal_run = true;
    } else {
      in_terminal_run = false;
    }
  }
  flush();
  if (open_sentence) ++out.sentence_count;
  return out;
}

void validate_pattern(std::string_view pattern) {
  const std::string shown(pattern);
  if (pattern.empty() || pattern == "*") throw ValidationError("empty pattern");
  const auto stars = std::count(pattern.begin(), pattern.end(), '*');
  if (stars > 1) throw ValidationError("multiple wildcards in pattern '" + shown + "'");
  if (stars == 1 && pattern.back() != '*') throw ValidationError("wildcard must be final in pattern '" + shown + "'");
  const auto body = stars ? pattern.substr(0, pattern.size() - 1) : pattern;
  for (char ch : body) {
    const auto c = static_cast<unsigned char>(ch);
    if (c >= 'A' && c <= 'Z') throw ValidationError("pattern '" + shown + "' is not lowercase");
    if (!is_word_byte(c)) throw ValidationError("pattern '" + shown + "' contains non-alphanumeric characters");
  }
}

Lexicon::Lexicon(std::string name, std::vector<std::string> categories, std::vector<Entry> entries)
    : name_(std::move(name)), categories_(std::move(categories)), entries_(std::move(entries)) {
  std::unordered_map<std::string, std::size_t> category_index;
  for (std::size_t i = 0; i < categories_.size(); ++i) {
    if (categories_[i].empty()) throw ValidationError("empty category name");
    if (!category_index.emplace(categories_[i], i).second) {
      throw ValidationError("duplicate category '" + categories_[i] + "'");
    }
  }
  std::unordered_set<std::string> seen;
  for (const auto& entry : entries_) {
    validate_pattern(entry.pattern);
    if (!seen.insert(entry.pattern).second) throw ValidationError("duplicate pattern '" + entry.pattern + "'");
    if (entry.categories.empty()) throw ValidationError("pattern '" + entry.pattern + "' has no categories");
    std::vector<std::size_t> hits;
    for (const auto& cat : entry.categories) {
      const auto it = category_index.find(cat);
      if (it == category_index.end()) {
        throw ValidationError("pattern '" + entry.pattern + "' references undeclared category '" + cat + "'");
      }
      hits.push_back(it->second);
    }
    std::sort(hits.begin(), hits.end());
    hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
    if (entry.pattern.back() == '*') {
      auto stem = entry.pattern.substr(0, entry.pattern.size() - 1);
      longest_stem_ = std::max(longest_stem_, stem.size());
      stems_.emplace(std::move(stem), std::move(hits));
    } else {
      exact_.emplace(entry.pattern, std::move(hits));
    }
  }
}

std::vector<std::size_t> Lexicon::match(std::string_view token) const {
  std::vector<std::size_t> hits;
  if (const auto it = exact_.find(std::string(token)); it != exact_.end()) {
    hits = it->second;
  }
  const auto max_len = std::min(longest_stem_, token.size());
  for (std::size_t len = 1; len <= max_len; ++len) {
    if (const auto it = stems_.find(std::string(token.substr(0, len))); it != stems_.end()) {
      hits.insert(hits.end(), it->second.begin(), it->second.end());
    }
  }
  std::sort(hits.begin(), hits.end());
  hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
  return hits;
}

Analysis analyze(std::string_view text, const Lexicon& lexicon) {
  const auto tokenized = tokenize(text);
  const auto& tokens = tokenized.tokens;

  Analysis result;
  for (const auto& cat : lexicon.categories()) result.profile[cat] = 0.0;

  const auto wc = tokens.size();
  result.stats.word_count = wc;
  if (wc == 0) return result;

  std::vector<std::size_t> counts(lexicon.categories().size(), 0);
  std::set<std::string_view> distinct;
  std::size_t six_letter = 0;
  for (const auto& token : tokens) {
    for (auto idx : lexicon.match(token)) ++counts[idx];
    distinct.insert(token);
    if (utf8_length(token) >= 6) ++six_letter;
  }

  const auto n = static_cast<double>(wc);
  result.stats.words_per_sentence = n / static_cast<double>(std::max<std::size_t>(1, tokenized.sentence_count));
  result.stats.unique_pct = 100.0 * static_cast<double>(distinct.size()) / n;
  result.stats.six_letter_pct = 100.0 * static_cast<double>(six_letter) / n;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    result.profile[lexicon.categories()[i]] = 100.0 * static_cast<double>(counts[i]) / n;
  }
  return result;
}

Lexicon parse_lexicon(std::istream& in, std::string name) {
  std::vector<std::string> categories;
  std::vector<Entry> entries;
  bool have_header = false;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line(raw);
    if (line_no == 1 && line.substr(0, 3) == "\xEF\xBB\xBF") line.remove_prefix(3);
    if (!line.empty() && line.front() == '%') {
      const std::string header = trim(line);
      constexpr std::string_view prefix = "%categories:";
      if (header.rfind(prefix, 0) != 0) throw ParseError(line_no, "unknown directive '" + header + "'");
      if (have_header) throw ParseError(line_no, "duplicate %categories header");
      categories = split_list(std::string_view(header).substr(prefix.size()));
      have_header = true;
      continue;
    }
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    if (!have_header) throw ParseError(line_no, "entry before %categories header");

    const auto space = content.find_first_of(" \t");
    if (space == std::string::npos) throw ParseError(line_no, "expected 'pattern category[,category]'");
    Entry entry;
    entry.pattern = content.substr(0, space);
    entry.categories = split_list(trim(std::string_view(content).substr(space + 1)));
    if (std::any_of(entry.categories.begin(), entry.categories.end(), [](const auto& c) {
          return c.empty() || c.find_first_of(" \t") != std::string::npos;
        })) {
      throw ParseError(line_no, "malformed category list");
    }
    try {
      validate_pattern(entry.pattern);
    } catch (const ValidationError& e) {
      throw ParseError(line_no, e.what());
    }
    entries.push_back(std::move(entry));
  }
  if (!have_header) throw ParseError(line_no == 0 ? 1 : line_no, "missing %categories header");
  return Lexicon(std::move(name), std::move(categories), std::move(entries));
}

Lexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open lexicon file '" + path.string() + "'");
  return parse_lexicon(in, path.stem().string());
}

}  // namespace pmsys::lexicon
