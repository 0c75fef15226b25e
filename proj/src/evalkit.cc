#include "kpgen/evalkit.h"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

#include "kpgen/porter.h"

namespace kpgen {

using json = nlohmann::json;

std::string to_string(Profile p) {
  switch (p) {
    case Profile::Kp20k: return "kp20k";
    case Profile::Other: return "other";
    case Profile::Semeval: return "semeval";
  }
  return "?";
}

Profile parse_profile(const std::string& s) {
  if (s == "kp20k") return Profile::Kp20k;
  if (s == "other") return Profile::Other;
  if (s == "semeval") return Profile::Semeval;
  throw std::invalid_argument("unknown dataset profile '" + s + "' (expected kp20k, other or semeval)");
}

std::string phrase_key(const Tokens& phrase) { return stem_phrase(phrase); }

bool match(const Tokens& pred, const Tokens& gold) { return phrase_key(pred) == phrase_key(gold); }

std::vector<Tokens> dedup_predictions(const std::vector<Tokens>& preds) {
  std::vector<Tokens> out;
  std::unordered_set<std::string> seen;
  for (const auto& p : preds)
    if (seen.insert(phrase_key(p)).second) out.push_back(p);
  return out;
}

namespace {

std::string gold_key(const Tokens& gold, const MetricOptions& options) {
  return options.stem_gold ? phrase_key(gold) : join_tokens(gold);
}

std::unordered_set<std::string> gold_keys(const std::vector<Tokens>& gold, const MetricOptions& options) {
  std::unordered_set<std::string> keys;
  for (const auto& g : gold) keys.insert(gold_key(g, options));
  return keys;
}

// hits[i] is true when prediction i (i < k) matches a gold phrase.
std::vector<bool> hits_at_k(const std::vector<Tokens>& preds, const std::vector<Tokens>& gold, size_t k,
                            const MetricOptions& options) {
  const auto keys = gold_keys(gold, options);
  const size_t n = std::min(k, preds.size());
  std::vector<bool> hits(n);
  for (size_t i = 0; i < n; ++i) hits[i] = keys.count(phrase_key(preds[i])) != 0;
  return hits;
}

size_t unique_gold_count(const std::vector<Tokens>& gold, const MetricOptions& options) {
  return gold_keys(gold, options).size();
}

}  // namespace

size_t correct_at_k(const std::vector<Tokens>& preds, const std::vector<Tokens>& gold, size_t k,
                    const MetricOptions& options) {
  auto hits = hits_at_k(preds, gold, k, options);
  return static_cast<size_t>(std::count(hits.begin(), hits.end(), true));
}

double precision_at_k(const std::vector<Tokens>& preds, const std::vector<Tokens>& gold, size_t k,
                      const MetricOptions& options) {
  if (preds.empty() || k == 0) return 0.0;
  const size_t denom = options.min_denominator ? std::min(k, preds.size()) : k;
  return static_cast<double>(correct_at_k(preds, gold, k, options)) / static_cast<double>(denom);
}

double recall_at_k(const std::vector<Tokens>& preds, const std::vector<Tokens>& gold, size_t k,
                   const MetricOptions& options) {
  const size_t g = unique_gold_count(gold, options);
  if (g == 0) return 0.0;
  return static_cast<double>(correct_at_k(preds, gold, k, options)) / static_cast<double>(g);
}

double f1_at_k(const std::vector<Tokens>& preds, const std::vector<Tokens>& gold, size_t k,
               const MetricOptions& options) {
  const double p = precision_at_k(preds, gold, k, options);
  const double r = recall_at_k(preds, gold, k, options);
  return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
}

double map_at_k(const std::vector<Tokens>& preds, const std::vector<Tokens>& gold, size_t k,
                const MetricOptions& options) {
  const size_t g = unique_gold_count(gold, options);
  if (g == 0 || k == 0) return 0.0;
  auto hits = hits_at_k(preds, gold, k, options);
  double total = 0.0;
  size_t correct = 0;
  for (size_t i = 0; i < hits.size(); ++i) {
    if (!hits[i]) continue;
    ++correct;
    total += static_cast<double>(correct) / static_cast<double>(i + 1);
  }
  return total / static_cast<double>(std::min(g, k));
}

PresentAbsent split_present_absent(const std::vector<Tokens>& preds, const std::vector<Tokens>& gold,
                                   const Tokens& source, bool stem_gold) {
  const Tokens stemmed = stem_tokens(source);
  PresentAbsent out;
  for (const auto& p : preds) (is_present(stemmed, p) ? out.present : out.absent).preds.push_back(p);
  for (const auto& g : gold) {
    const bool present = stem_gold ? is_present(stemmed, g) : contains_run(stemmed, g);
    (present ? out.present : out.absent).gold.push_back(g);
  }
  return out;
}

std::vector<Tokens> select_final(const std::vector<Tokens>& ranked, Profile profile) {
  std::vector<Tokens> out;
  bool single_seen = false;
  for (const auto& p : ranked) {
    if (p.size() == 1 && profile != Profile::Kp20k) {
      if (single_seen) continue;
      single_seen = true;
    }
    out.push_back(p);
  }
  return out;
}

namespace {

struct Average {
  double total = 0.0;
  size_t count = 0;
  void add(double v) {
    total += v;
    ++count;
  }
  json value() const { return count ? total / static_cast<double>(count) : 0.0; }
};

json phrases_json(const std::vector<Tokens>& phrases) {
  json arr = json::array();
  for (const auto& p : phrases) arr.push_back(join_tokens(p));
  return arr;
}

}  // namespace

json evaluate_documents(const std::vector<EvalDocument>& docs, Profile profile, const MetricOptions& base) {
  MetricOptions options = base;
  if (profile == Profile::Semeval) options.stem_gold = false;
  Average f1_5, f1_10, map_10, present_f1_5, absent_r_10;
  json rows = json::array();
  for (const auto& doc : docs) {
    const auto preds = select_final(dedup_predictions(doc.preds), profile);
    const auto split = split_present_absent(preds, doc.gold, doc.source, options.stem_gold);
    json row{{"id", doc.id}, {"predictions", phrases_json(preds)}};
    if (!doc.gold.empty()) {
      row["f1@5"] = f1_at_k(preds, doc.gold, 5, options);
      row["f1@10"] = f1_at_k(preds, doc.gold, 10, options);
      row["map@10"] = map_at_k(preds, doc.gold, 10, options);
      f1_5.add(row["f1@5"]);
      f1_10.add(row["f1@10"]);
      map_10.add(row["map@10"]);
    }
    if (!split.present.gold.empty()) {
      row["present_f1@5"] = f1_at_k(split.present.preds, split.present.gold, 5, options);
      present_f1_5.add(row["present_f1@5"]);
    }
    if (!split.absent.gold.empty()) {
      row["absent_r@10"] = recall_at_k(split.absent.preds, split.absent.gold, 10, options);
      absent_r_10.add(row["absent_r@10"]);
    }
    row["present_gold"] = split.present.gold.size();
    row["absent_gold"] = split.absent.gold.size();
    rows.push_back(std::move(row));
  }
  json report;
  report["profile"] = to_string(profile);
  report["documents"] = docs.size();
  report["precision_denominator"] = options.min_denominator ? "min(k,|preds|)" : "k";
  report["total"] = {{"f1@5", f1_5.value()}, {"f1@10", f1_10.value()}, {"map@10", map_10.value()},
                     {"documents", f1_5.count}};
  report["present"] = {{"f1@5", present_f1_5.value()}, {"documents", present_f1_5.count}};
  report["absent"] = {{"r@10", absent_r_10.value()}, {"documents", absent_r_10.count}};
  report["per_document"] = std::move(rows);
  return report;
}

}  // namespace kpgen
