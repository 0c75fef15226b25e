#include "kpgen/candidates.h"

#include <stdexcept>

#include "kpgen/porter.h"

namespace kpgen {

using json = nlohmann::json;

std::vector<ScoredPhrase> collect_extracted(const Tokens& tokens, const std::vector<double>& beta,
                                            const ExtractOptions& options) {
  if (tokens.size() != beta.size())
    throw std::invalid_argument("collect_extracted: " + std::to_string(tokens.size()) + " tokens vs " +
                                std::to_string(beta.size()) + " scores");
  std::vector<ScoredPhrase> found;
  ScoredPhrase run;
  double total = 0.0;
  auto flush = [&] {
    if (run.tokens.empty()) return;
    run.score = total / static_cast<double>(run.tokens.size());
    found.push_back(std::move(run));
    run = {};
    total = 0.0;
  };
  for (size_t i = 0; i < tokens.size(); ++i) {
    bool keyword = beta[i] >= options.threshold;
    if (options.filter_punctuation && is_punctuation_token(tokens[i])) keyword = false;
    if (!keyword) {
      flush();
      continue;
    }
    run.tokens.push_back(tokens[i]);
    total += beta[i];
  }
  flush();
  return dedup_keep_max(std::move(found));
}

namespace {

std::vector<Candidate> with_presence(const std::vector<ScoredPhrase>& phrases, const Tokens& stemmed_source) {
  std::vector<ScoredPhrase> sorted = phrases;
  sort_by_score(sorted);
  std::vector<Candidate> out;
  out.reserve(sorted.size());
  for (auto& p : sorted) {
    const bool present = is_present(stemmed_source, p.tokens);
    out.push_back({std::move(p.tokens), p.score, present});
  }
  return out;
}

json list_to_json(const std::vector<Candidate>& list) {
  json arr = json::array();
  for (const auto& c : list) arr.push_back({{"phrase", c.text()}, {"score", c.score}});
  return arr;
}

std::vector<ScoredPhrase> list_from_json(const json& arr) {
  std::vector<ScoredPhrase> out;
  for (const auto& item : arr) out.push_back({tokenize(item.at("phrase").get<std::string>()), item.at("score").get<double>()});
  return out;
}

}  // namespace

CandidateSet assemble(const std::vector<ScoredPhrase>& retrieved, const std::vector<ScoredPhrase>& extracted,
                      const std::vector<ScoredPhrase>& generated, const Tokens& source) {
  const Tokens stemmed = stem_tokens(source);
  CandidateSet set;
  set.retrieved = with_presence(retrieved, stemmed);
  set.extracted = with_presence(extracted, stemmed);
  set.generated = with_presence(generated, stemmed);
  return set;
}

json candidates_to_json(const std::string& doc_id, const CandidateSet& set) {
  return json{{"id", doc_id},
              {"rk", list_to_json(set.retrieved)},
              {"ek", list_to_json(set.extracted)},
              {"gk", list_to_json(set.generated)}};
}

CandidateSet candidates_from_json(const json& j, const Tokens& source) {
  return assemble(list_from_json(j.at("rk")), list_from_json(j.at("ek")), list_from_json(j.at("gk")), source);
}

}  // namespace kpgen
