#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kpgen/corpus.h"
#include "kpgen/text.h"

namespace kpgen {

struct Neighbor {
  std::string doc_id;
  double score = 0.0;
  std::vector<Tokens> keyphrases;
};

struct RetrievalResult {
  std::vector<Neighbor> neighbors;  // score descending, ties by smaller doc_id
  size_t k = 0;
};

// Inverted index over non-stop-word token sets of a training corpus.
// Documents are held in doc_id order, so posting lists of ordinals are
// sorted by doc_id as well.
class RetrievalIndex {
 public:
  struct Entry {
    std::string doc_id;
    std::vector<std::string> terms;  // sorted unique
    std::vector<Tokens> keyphrases;
  };

  static RetrievalIndex build(const std::vector<TokenizedDoc>& docs, const StopWords& stopwords);
  // `meta` is stored alongside the index and handed back by load.
  static RetrievalIndex load(const std::string& path, nlohmann::json* meta = nullptr);
  void save(const std::string& path, const nlohmann::json& meta = nlohmann::json::object()) const;

  // Top-k neighbors by Jaccard similarity; documents sharing no term are
  // never returned and the query's own id is excluded.
  RetrievalResult retrieve(const TokenizedDoc& query, size_t k = 3) const;

  const std::vector<Entry>& entries() const { return entries_; }
  const std::map<std::string, std::vector<size_t>>& postings() const { return postings_; }
  const StopWords& stopwords() const { return stopwords_; }
  size_t size() const { return entries_.size(); }
  uint64_t fingerprint() const;

 private:
  void rebuild_postings();

  std::vector<Entry> entries_;
  std::map<std::string, std::vector<size_t>> postings_;
  StopWords stopwords_;
};

// All neighbors' keyphrases in order with ";" between consecutive phrases.
Tokens concat_retrieved(const RetrievalResult& result);

// Each phrase carries its neighbor's Jaccard score; stemmed duplicates keep the max.
std::vector<ScoredPhrase> collect_retrieved_candidates(const RetrievalResult& result);

}  // namespace kpgen
