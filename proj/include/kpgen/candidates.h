#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kpgen/text.h"

namespace kpgen {

struct Candidate {
  Tokens tokens;
  double score = 0.0;
  bool present = false;  // stemmed phrase occurs contiguously in the stemmed source

  std::string text() const { return join_tokens(tokens); }
};

// rk/rs, ek/es, gk/gs. Each list is stemmed-unique and sorted by score
// descending (ties: surface text).
struct CandidateSet {
  std::vector<Candidate> retrieved;
  std::vector<Candidate> extracted;
  std::vector<Candidate> generated;

  bool empty() const { return retrieved.empty() && extracted.empty() && generated.empty(); }
};

struct ExtractOptions {
  double threshold = 0.7;
  bool filter_punctuation = true;  // punctuation never counts as a keyword
};

// Maximal runs of positions with β ≥ threshold, each scored by the mean β
// over the run; stemmed duplicates keep the max.
std::vector<ScoredPhrase> collect_extracted(const Tokens& tokens, const std::vector<double>& beta,
                                            const ExtractOptions& options = {});

CandidateSet assemble(const std::vector<ScoredPhrase>& retrieved, const std::vector<ScoredPhrase>& extracted,
                      const std::vector<ScoredPhrase>& generated, const Tokens& source);

// {"id", "rk":[{"phrase","score"}...], "ek":[...], "gk":[...]}
nlohmann::json candidates_to_json(const std::string& doc_id, const CandidateSet& set);
CandidateSet candidates_from_json(const nlohmann::json& j, const Tokens& source);

}  // namespace kpgen
