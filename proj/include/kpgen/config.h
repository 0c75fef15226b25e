#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kpgen/kgmodel.h"
#include "kpgen/scorer.h"

namespace kpgen {

// Which artifact a key influences. A key may influence several.
enum Section : unsigned {
  kSectionPreprocess = 1u << 0,
  kSectionModel = 1u << 1,
  kSectionScorer = 1u << 2,
};

struct PipelineConfig {
  std::string train_path = "data/toy/train.jsonl";
  std::string valid_path = "data/toy/valid.jsonl";
  std::string test_path = "data/toy/test.jsonl";
  std::string stopwords_path;  // empty: built-in English list
  std::string work_dir = "run";
  std::string mode = "KG-KE-KR-M";
  std::string profile = "kp20k";
  uint64_t seed = 1;
  size_t threads = 1;
  size_t retrieval_k = 3;
  double dedup_threshold = 0.9;
  size_t vocab_max_size = 50000;
  bool stemmed_labels = false;
  double extract_threshold = 0.7;
  bool extract_filter_punctuation = true;
  bool eval_min_denominator = true;
  ModelConfig model;
  ScorerConfig scorer;

  // Merging on top of the KG-KE-KR model.
  bool merging() const { return mode == "KG-KE-KR-M"; }
  Mode model_mode() const;

  void validate() const;

  // Applies "key=value"; throws on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  static std::vector<std::string> keys();

  // key = value lines in key order.
  std::string effective() const;
  // FNV-1a over the keys that influence `sections` (mode folded to the model mode).
  uint64_t hash(unsigned sections) const;
};

// Flat "key = value" text; '#' starts a comment. Unknown keys are errors
// reported with their line number.
PipelineConfig parse_config(const std::string& text, PipelineConfig base = {});
PipelineConfig load_config(const std::string& path, PipelineConfig base = {});

// Defaults sized for the bundled toy corpus.
PipelineConfig toy_config();

}  // namespace kpgen
