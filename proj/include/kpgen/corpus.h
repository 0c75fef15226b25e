#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "kpgen/text.h"

namespace kpgen {

struct Document {
  std::string id;
  std::string title;
  std::string abstract;
  std::vector<std::string> keyphrases;
};

struct TokenizedDoc {
  std::string doc_id;
  Tokens tokens;  // title followed by abstract
  std::vector<Tokens> gold_phrases;
  std::vector<bool> present_mask;
};

class DatasetError : public std::runtime_error {
 public:
  DatasetError(size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  size_t line() const { return line_; }

 private:
  size_t line_;
};

// JSONL with keys id, title, abstract, keyphrases. Blank lines are skipped.
std::vector<Document> load_dataset(const std::string& path);
std::vector<Document> parse_dataset(std::istream& in);
void write_dataset(std::ostream& out, const std::vector<Document>& docs);

TokenizedDoc tokenize_document(const Document& doc);
std::vector<TokenizedDoc> tokenize_documents(const std::vector<Document>& docs);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;
  static constexpr int kSep = 4;
  static constexpr int kNumReserved = 5;

  Vocabulary();

  // Content tokens ordered by descending frequency over source and gold
  // tokens, ties broken lexicographically; at most max_size of them.
  static Vocabulary build(const std::vector<TokenizedDoc>& docs, size_t max_size = 50000);
  static Vocabulary from_tokens(std::vector<std::string> tokens);
  static Vocabulary load(const std::string& path);
  void save(const std::string& path) const;

  int index_of(const std::string& token) const;  // kUnk when absent
  bool contains(const std::string& token) const { return index_.count(token) != 0; }
  const std::string& token_of(int index) const { return tokens_.at(static_cast<size_t>(index)); }
  size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  uint64_t fingerprint() const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// β*[i] = 1 iff tokens[i] equals some token of some gold phrase (compared
// after Porter stemming when `stemmed`).
std::vector<int> gold_importance(const Tokens& tokens, const std::vector<Tokens>& gold_phrases, bool stemmed = false);

// Source tokens absent from the vocabulary get extended ids vocab.size() + k
// in first-occurrence order, so the copy branch can address them.
struct SourceMap {
  std::vector<int> ids;      // vocabulary ids, OOV mapped to <unk>
  std::vector<int> ext_ids;  // ids in V ∪ X
  std::vector<std::string> oov_tokens;

  size_t extended_size(const Vocabulary& vocab) const { return vocab.size() + oov_tokens.size(); }
  // Extended id for a target token, or -1 when neither in V nor in x.
  int target_id(const std::string& token, const Vocabulary& vocab) const;
};

SourceMap map_source(const Tokens& tokens, const Vocabulary& vocab);

struct TrainingTuple {
  std::string doc_id;
  Tokens source;
  SourceMap x;
  std::vector<int> r;
  std::vector<int> beta_star;
  std::vector<int> y;         // decoder inputs-as-targets with <unk> for OOV, ends in <eos>
  std::vector<int> y_target;  // extended ids, -1 for positions that cannot be produced
};

std::vector<TrainingTuple> split_tuples(const TokenizedDoc& doc, const Tokens& retrieved,
                                        const Vocabulary& vocab, size_t max_source_len = 400,
                                        bool stemmed_labels = false);

// Drops documents whose non-stop-word title+abstract set has Jaccard
// similarity >= threshold with an earlier kept document.
std::vector<Document> dedup_corpus(const std::vector<Document>& docs, const StopWords& stopwords,
                                   double threshold = 0.9);

uint64_t fnv1a(std::string_view data, uint64_t seed = 1469598103934665603ULL);

}  // namespace kpgen
