#include "kpgen/merger.h"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "kpgen/porter.h"

namespace kpgen {

using json = nlohmann::json;

namespace {

double mean_score(const std::vector<Candidate>& list) {
  if (list.empty()) return 0.0;
  double total = 0.0;
  for (const auto& c : list) total += c.score;
  return total / static_cast<double>(list.size());
}

void sort_ranked(std::vector<MergedCandidate>& ranked) {
  std::stable_sort(ranked.begin(), ranked.end(), [](const MergedCandidate& a, const MergedCandidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.text() < b.text();
  });
}

}  // namespace

MergeResult merge(const CandidateSet& set, const CandidateScorer& scorer) {
  if (set.empty()) throw std::invalid_argument("merge: all candidate lists are empty");
  MergeResult result;
  result.u_rs = mean_score(set.retrieved);
  result.u_es = mean_score(set.extracted);
  result.u_gs = mean_score(set.generated);
  const bool have_g = !set.generated.empty();
  const double r_factor = have_g && result.u_rs > 0 ? result.u_gs / result.u_rs : 1.0;
  const double e_factor = have_g && result.u_es > 0 ? result.u_gs / result.u_es : 1.0;

  std::map<std::string, size_t> slot;
  auto accumulate = [&](const Candidate& c, double adjusted, std::optional<double> MergedCandidate::*field) {
    auto [it, fresh] = slot.emplace(stem_phrase(c.tokens), result.ranked.size());
    if (fresh) result.ranked.push_back({c.tokens, 0.0, {}, {}, {}, c.present});
    MergedCandidate& m = result.ranked[it->second];
    m.*field = (m.*field).value_or(0.0) + adjusted;
  };
  for (const auto& c : set.generated) accumulate(c, c.score * scorer(c.tokens), &MergedCandidate::generated);
  for (const auto& c : set.retrieved) accumulate(c, c.score * r_factor * scorer(c.tokens), &MergedCandidate::retrieved);
  for (const auto& c : set.extracted) accumulate(c, c.score * e_factor * scorer(c.tokens), &MergedCandidate::extracted);

  for (auto& m : result.ranked)
    m.score = m.generated.value_or(0.0) + m.retrieved.value_or(0.0) + m.extracted.value_or(0.0);
  sort_ranked(result.ranked);
  return result;
}

MergeResult passthrough_generated(const CandidateSet& set) {
  MergeResult result;
  result.u_gs = mean_score(set.generated);
  for (const auto& c : set.generated) result.ranked.push_back({c.tokens, c.score, {}, {}, c.score, c.present});
  return result;
}

json prediction_to_json(const std::string& doc_id, const std::vector<MergedCandidate>& ranked) {
  json preds = json::array();
  for (const auto& m : ranked) {
    json sources = json::object();
    if (m.retrieved) sources["r"] = *m.retrieved;
    if (m.extracted) sources["e"] = *m.extracted;
    if (m.generated) sources["g"] = *m.generated;
    preds.push_back({{"phrase", m.text()}, {"score", m.score}, {"sources", sources}, {"present", m.present}});
  }
  return json{{"id", doc_id}, {"predictions", std::move(preds)}};
}

}  // namespace kpgen
