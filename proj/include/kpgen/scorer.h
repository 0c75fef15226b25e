#pragma once

#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kpgen/autodiff.h"
#include "kpgen/corpus.h"
#include "kpgen/text.h"

namespace kpgen {

struct ScorerConfig {
  size_t embedding_dim = 100;
  size_t hidden_dim = 300;  // BiGRU output; each direction gets half
  size_t attend_dim = 100;  // F and G feed-forward width
  size_t aggregate_dim = 100;
  double dropout = 0.1;
  double lr = 0.001;
  size_t batch_size = 64;
  double max_grad_norm = 1.0;
  double init_range = 0.1;
  size_t max_epochs = 30;
  size_t patience = 4;
  size_t max_source_len = 400;
  size_t negative_ratio = 2;     // negatives per positive
  double span_fraction = 0.5;    // share of negatives drawn from document spans

  void validate() const;
  nlohmann::json to_json() const;
  static ScorerConfig from_json(const nlohmann::json& j);
};

struct ScorerExample {
  std::string doc_id;
  std::vector<int> doc;
  std::vector<int> candidate;
  int label = 0;
};

// Decomposable attention over BiGRU encodings of the document (a) and the
// candidate (b):
//   F_a = tanh(a W_f + b_f), E = F_a F_bᵀ
//   β = softmax_rows(E) b,   α = softmax_rows(Eᵀ) a
//   G_a = tanh([a; β] W_g + b_g), G_b = tanh([b; α] W_g + b_g)
//   p = σ(tanh([mean G_a; mean G_b] W_h + b_h) w_o + b_o)
class Scorer {
 public:
  Scorer(ScorerConfig config, size_t vocab_tokens);

  const ScorerConfig& config() const { return config_; }
  size_t vocab_tokens() const { return vocab_tokens_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }
  void init(uint64_t seed);

  struct DocEncoding {
    Var a;
    Var f_a;
  };
  DocEncoding encode_document(Tape& tape, const std::vector<int>& doc, Rng* dropout_rng = nullptr) const;
  Var logit(Tape& tape, const DocEncoding& doc, const std::vector<int>& candidate, Rng* dropout_rng = nullptr) const;

  double score(const std::vector<int>& doc, const std::vector<int>& candidate) const;
  // One document encoding shared by all candidates.
  std::vector<double> score_all(const std::vector<int>& doc, const std::vector<std::vector<int>>& candidates) const;

  void save(const std::string& path, const nlohmann::json& extra_meta = {}) const;
  static Scorer load(const std::string& path, nlohmann::json* meta_out = nullptr);

 private:
  Var encode(Tape& tape, const GruWeights& fwd, const GruWeights& bwd, const std::vector<int>& ids,
             Rng* dropout_rng) const;

  ScorerConfig config_;
  size_t vocab_tokens_ = 0;
  ParameterStore params_;
  Parameter* embedding_ = nullptr;
  GruWeights doc_fwd_, doc_bwd_, cand_fwd_, cand_bwd_;
  Parameter* w_f_ = nullptr;
  Parameter* b_f_ = nullptr;
  Parameter* w_g_ = nullptr;
  Parameter* b_g_ = nullptr;
  Parameter* w_h_ = nullptr;
  Parameter* b_h_ = nullptr;
  Parameter* w_o_ = nullptr;
  Parameter* b_o_ = nullptr;
};

std::vector<int> to_ids(const Tokens& tokens, const Vocabulary& vocab, size_t max_len = 0);

// Distinct negatives for one document: about span_fraction of them random
// contiguous 1–3 token spans of the document (no punctuation inside), the
// rest drawn from `retrieved`. Anything stem-equal to a gold phrase is
// rejected. Returns fewer than n_neg when the pools run dry.
std::vector<Tokens> sample_negatives(const TokenizedDoc& doc, const std::vector<Tokens>& retrieved, size_t n_neg,
                                     double span_fraction, Rng& rng);

// Gold phrases as positives plus negative_ratio × |gold| sampled negatives.
std::vector<ScorerExample> make_scorer_examples(const TokenizedDoc& doc, const std::vector<Tokens>& retrieved,
                                                const Vocabulary& vocab, const ScorerConfig& config, Rng& rng);

struct ScorerLogEntry {
  size_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double valid_accuracy = 0.0;
  nlohmann::json to_json() const;
};

struct ScorerTrainResult {
  std::vector<ScorerLogEntry> log;
  double best_valid_accuracy = 0.0;
};

double scorer_accuracy(const Scorer& scorer, const std::vector<ScorerExample>& examples);

// Binary cross-entropy with Adam; early stopping on validation accuracy;
// the scorer ends holding the best-validation parameters.
ScorerTrainResult train_scorer(Scorer& scorer, const std::vector<ScorerExample>& train_set,
                               const std::vector<ScorerExample>& valid_set, uint64_t seed,
                               const std::function<void(const ScorerLogEntry&)>& on_epoch = {});

}  // namespace kpgen
