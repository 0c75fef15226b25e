#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kpgen/candidates.h"

namespace kpgen {

// scorer(x, candidate) for the document being merged.
using CandidateScorer = std::function<double(const Tokens& candidate)>;

struct MergedCandidate {
  Tokens tokens;
  double score = 0.0;
  std::optional<double> retrieved;  // adjusted rs, if the phrase came from rk
  std::optional<double> extracted;
  std::optional<double> generated;
  bool present = false;

  std::string text() const { return join_tokens(tokens); }
};

struct MergeResult {
  std::vector<MergedCandidate> ranked;  // score descending, ties by surface text
  double u_rs = 0.0;
  double u_es = 0.0;
  double u_gs = 0.0;
};

// gs_i ← gs_i·scorer(gk_i); rs_i ← rs_i·(u_gs/u_rs)·scorer(rk_i);
// es_i ← es_i·(u_gs/u_es)·scorer(ek_i); the final score of each stemmed
// phrase is the sum of its adjusted scores. The surface form shown is the
// first one met in gk, then rk, then ek. With gk empty the averaging factor
// is 1.
MergeResult merge(const CandidateSet& set, const CandidateScorer& scorer);

// Generated candidates only, in beam order (no merging).
MergeResult passthrough_generated(const CandidateSet& set);

// {"id", "predictions":[{"phrase","score","sources":{"r","e","g"},"present"}...]}
nlohmann::json prediction_to_json(const std::string& doc_id, const std::vector<MergedCandidate>& ranked);

}  // namespace kpgen
