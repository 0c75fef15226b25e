#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kpgen/text.h"

namespace kpgen {

// kp20k: keep every single-word prediction.
// other: keep only the top single-word prediction.
// semeval: as other, and gold phrases are taken as already stemmed.
enum class Profile { Kp20k, Other, Semeval };

std::string to_string(Profile p);
Profile parse_profile(const std::string& s);

// Porter-stemmed, space-joined form used as the identity of a phrase.
std::string phrase_key(const Tokens& phrase);

bool match(const Tokens& pred, const Tokens& gold);

// First occurrence per stemmed form, order preserved.
std::vector<Tokens> dedup_predictions(const std::vector<Tokens>& preds);

struct MetricOptions {
  bool stem_gold = true;
  // Precision divides by min(k, |preds|) when true, by k otherwise.
  bool min_denominator = true;
};

size_t correct_at_k(const std::vector<Tokens>& preds, const std::vector<Tokens>& gold, size_t k,
                    const MetricOptions& options = {});
double precision_at_k(const std::vector<Tokens>& preds, const std::vector<Tokens>& gold, size_t k,
                      const MetricOptions& options = {});
double recall_at_k(const std::vector<Tokens>& preds, const std::vector<Tokens>& gold, size_t k,
                   const MetricOptions& options = {});
double f1_at_k(const std::vector<Tokens>& preds, const std::vector<Tokens>& gold, size_t k,
               const MetricOptions& options = {});
// Sum over correct ranks i ≤ k of (correct in top i)/i, divided by min(|gold|, k).
double map_at_k(const std::vector<Tokens>& preds, const std::vector<Tokens>& gold, size_t k = 10,
                const MetricOptions& options = {});

struct Split {
  std::vector<Tokens> preds;
  std::vector<Tokens> gold;
};

struct PresentAbsent {
  Split present;
  Split absent;
};

PresentAbsent split_present_absent(const std::vector<Tokens>& preds, const std::vector<Tokens>& gold,
                                   const Tokens& source, bool stem_gold = true);

// Keeps every multi-word phrase; single-word phrases are all kept under
// kp20k and only the first one otherwise. Order is preserved.
std::vector<Tokens> select_final(const std::vector<Tokens>& ranked, Profile profile);

struct EvalDocument {
  std::string id;
  std::vector<Tokens> preds;  // ranked
  std::vector<Tokens> gold;
  Tokens source;
};

// Macro-averaged F1@5, F1@10, MAP@10 (total), F1@5 (present), R@10 (absent)
// plus per-document rows. Documents with empty gold in a split are left out
// of that split's average.
nlohmann::json evaluate_documents(const std::vector<EvalDocument>& docs, Profile profile,
                                  const MetricOptions& options = {});

}  // namespace kpgen
