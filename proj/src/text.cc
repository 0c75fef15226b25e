#include "kpgen/text.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <stdexcept>

#include "kpgen/porter.h"

namespace kpgen {
namespace {

bool is_word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c >= 0x80;
}

bool is_space_byte(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

// NLTK English stop words plus punctuation and the digit placeholder.
constexpr const char* kEnglishStopWords[] = {
    "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "your", "yours", "yourself",
    "yourselves", "he", "him", "his", "himself", "she", "her", "hers", "herself", "it", "its", "itself",
    "they", "them", "their", "theirs", "themselves", "what", "which", "who", "whom", "this", "that",
    "these", "those", "am", "is", "are", "was", "were", "be", "been", "being", "have", "has", "had",
    "having", "do", "does", "did", "doing", "a", "an", "the", "and", "but", "if", "or", "because", "as",
    "until", "while", "of", "at", "by", "for", "with", "about", "against", "between", "into", "through",
    "during", "before", "after", "above", "below", "to", "from", "up", "down", "in", "out", "on", "off",
    "over", "under", "again", "further", "then", "once", "here", "there", "when", "where", "why", "how",
    "all", "any", "both", "each", "few", "more", "most", "other", "some", "such", "no", "nor", "not",
    "only", "own", "same", "so", "than", "too", "very", "s", "t", "can", "will", "just", "don", "should",
    "now", "d", "ll", "m", "o", "re", "ve", "y", "ain", "aren", "couldn", "didn", "doesn", "hadn",
    "hasn", "haven", "isn", "ma", "mightn", "mustn", "needn", "shan", "shouldn", "wasn", "weren", "won",
    "wouldn", "<digit>", ".", ",", ";", ":", "!", "?", "'", "\"", "(", ")", "[", "]", "{", "}", "-",
    "/", "\\", "%", "&", "*", "+", "=", "<", ">", "@", "#", "$", "^", "`", "|", "~",
};

}  // namespace

Tokens tokenize(std::string_view text) {
  Tokens out;
  size_t i = 0;
  const size_t n = text.size();
  while (i < n) {
    auto c = static_cast<unsigned char>(text[i]);
    if (is_space_byte(c)) {
      ++i;
      continue;
    }
    if (c == '<' && text.substr(i, kDigitToken.size()) == kDigitToken) {
      out.emplace_back(kDigitToken);
      i += kDigitToken.size();
      continue;
    }
    if (is_word_byte(c)) {
      size_t j = i;
      std::string word;
      while (j < n && is_word_byte(static_cast<unsigned char>(text[j]))) {
        char ch = text[j];
        if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
        word.push_back(ch);
        ++j;
      }
      out.push_back(all_digits(word) ? std::string(kDigitToken) : std::move(word));
      i = j;
      continue;
    }
    out.emplace_back(1, static_cast<char>(c));
    ++i;
  }
  return out;
}

std::string join_tokens(const Tokens& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

bool is_punctuation_token(std::string_view token) {
  return token.size() == 1 && !is_word_byte(static_cast<unsigned char>(token[0]));
}

StopWords StopWords::english() {
  std::unordered_set<std::string> words;
  for (const char* w : kEnglishStopWords) words.insert(w);
  return StopWords(std::move(words));
}

StopWords StopWords::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open stop-word file: " + path);
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) words.insert(line);
  }
  return StopWords(std::move(words));
}

void StopWords::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write stop-word file: " + path);
  for (const auto& w : sorted()) out << w << '\n';
}

std::vector<std::string> StopWords::sorted() const {
  std::vector<std::string> v(words_.begin(), words_.end());
  std::sort(v.begin(), v.end());
  return v;
}

std::vector<std::string> content_set(const Tokens& tokens, const StopWords& stopwords) {
  std::vector<std::string> out;
  for (const auto& t : tokens)
    if (!stopwords.contains(t)) out.push_back(t);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.empty() && b.empty()) return 0.0;
  size_t inter = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++inter;
      ++ia;
      ++ib;
    }
  }
  size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

bool contains_run(const Tokens& haystack, const Tokens& needle) {
  if (needle.empty() || needle.size() > haystack.size()) return false;
  return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) != haystack.end();
}

bool is_present(const Tokens& stemmed_source, const Tokens& phrase) {
  return contains_run(stemmed_source, stem_tokens(phrase));
}

void sort_by_score(std::vector<ScoredPhrase>& phrases) {
  std::stable_sort(phrases.begin(), phrases.end(), [](const ScoredPhrase& a, const ScoredPhrase& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.text() < b.text();
  });
}

std::vector<ScoredPhrase> dedup_keep_max(std::vector<ScoredPhrase> phrases) {
  sort_by_score(phrases);
  std::vector<ScoredPhrase> out;
  std::unordered_set<std::string> seen;
  for (auto& p : phrases) {
    if (seen.insert(stem_phrase(p.tokens)).second) out.push_back(std::move(p));
  }
  return out;
}

}  // namespace kpgen
