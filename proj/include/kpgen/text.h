#pragma once

#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace kpgen {

inline constexpr std::string_view kDigitToken = "<digit>";

using Tokens = std::vector<std::string>;

// Lowercases ASCII, splits into maximal runs of word characters (ASCII
// alphanumerics, '_' and any non-ASCII byte) and single punctuation marks.
// Digit-only runs become "<digit>". The literal "<digit>" is kept whole so
// tokenize(join_tokens(tokenize(t))) == tokenize(t).
Tokens tokenize(std::string_view text);

std::string join_tokens(const Tokens& tokens);

bool is_punctuation_token(std::string_view token);

class StopWords {
 public:
  StopWords() = default;
  explicit StopWords(std::unordered_set<std::string> words) : words_(std::move(words)) {}

  // English list shipped with the project (also written to data/stopwords.txt).
  static StopWords english();
  static StopWords load(const std::string& path);
  void save(const std::string& path) const;

  bool contains(const std::string& token) const { return words_.count(token) != 0; }
  std::vector<std::string> sorted() const;
  size_t size() const { return words_.size(); }

 private:
  std::unordered_set<std::string> words_;
};

// Sorted, unique non-stop-word tokens.
std::vector<std::string> content_set(const Tokens& tokens, const StopWords& stopwords);

// |a ∩ b| / |a ∪ b| over sorted unique vectors; 0 when both are empty.
double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b);

// True when `needle` occurs as a contiguous run inside `haystack`.
bool contains_run(const Tokens& haystack, const Tokens& needle);

// Present means the stemmed phrase occurs contiguously in the stemmed source.
bool is_present(const Tokens& stemmed_source, const Tokens& phrase);

struct ScoredPhrase {
  Tokens tokens;
  double score = 0.0;

  std::string text() const { return join_tokens(tokens); }
};

// Collapses phrases with equal stemmed form, keeping the highest score, and
// orders by score descending (ties: lexicographic surface text).
std::vector<ScoredPhrase> dedup_keep_max(std::vector<ScoredPhrase> phrases);

void sort_by_score(std::vector<ScoredPhrase>& phrases);

}  // namespace kpgen
