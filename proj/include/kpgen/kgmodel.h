#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kpgen/autodiff.h"
#include "kpgen/beam.h"
#include "kpgen/corpus.h"
#include "kpgen/text.h"

namespace kpgen {

// Which parts of the joint network are active.
//   KgKe:   extractor + generator, no retrieved keyphrases
//   KgKr:   generator with retrieved keyphrases, no extractor
//   KgKeKr: both
enum class Mode { KgKe, KgKr, KgKeKr };

std::string to_string(Mode m);
Mode parse_mode(const std::string& s);  // "KG-KE", "KG-KR", "KG-KE-KR"
inline bool uses_extractor(Mode m) { return m != Mode::KgKr; }
inline bool uses_retrieval(Mode m) { return m != Mode::KgKe; }

struct ModelConfig {
  size_t embedding_dim = 100;
  size_t hidden_dim = 300;  // bidirectional; each direction gets half
  size_t vocab_size = 50000;
  double pos_loss_weight = 9.0;
  double dropout = 0.1;
  size_t batch_size = 64;
  double lr = 0.001;
  double max_grad_norm = 1.0;
  double init_range = 0.1;
  size_t beam_depth = 6;
  size_t beam_size = 200;
  bool length_normalize = true;
  size_t max_source_len = 400;
  size_t max_epochs = 50;
  size_t patience = 4;
  size_t eval_every = 0;  // updates between validation runs; 0 = once per epoch
  Mode mode = Mode::KgKeKr;

  void validate() const;
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

struct EncodedSource {
  Var memory;     // U, L_x × d
  Var memory_t;   // Uᵀ
  Var doc_vec;    // tanh(W_d[→u_L; ←u_1] + b_d), 1 × d
  Var h0;         // [→u_L; ←u_1]
};

struct EncodedRetrieved {
  Var memory;     // V, L_r × d; invalid when r is empty
  Var memory_t;
  bool empty() const { return !memory.valid(); }
};

struct DecoderState {
  Var h;
  Var h_tilde;
};

struct DecodeStep {
  Var dist;       // P(y_t) over V ∪ X
  DecoderState state;
  Var gate;       // g_t
  Var alpha_in;
  Var alpha_ex;   // invalid without retrieval
  Var alpha_copy;
  Var p_vocab;
};

// (context, weights) = attn(h, memory, W): weights = softmax(h W memoryᵀ).
std::pair<Var, Var> attend(Var h, Var memory, Var memory_t, Var w);

// α_c,i = α_in,i β_i / Σ_j α_in,j β_j.
Var rescale_copy(Var alpha_in, Var beta);

// −(1/L) Σ_j [w β*_j log β_j + (1 − β*_j) log(1 − β_j)], logs clamped at 1e-12.
Var extraction_loss(Var beta, const std::vector<int>& beta_star, double pos_weight);

// −Σ_t log P(y*_t); targets < 0 are skipped.
Var generation_loss(const std::vector<Var>& step_dists, const std::vector<int>& targets);

class KgModel {
 public:
  // `vocab_tokens` is the full vocabulary size including reserved tokens.
  KgModel(ModelConfig config, size_t vocab_tokens);

  const ModelConfig& config() const { return config_; }
  size_t vocab_tokens() const { return vocab_tokens_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }
  void init(uint64_t seed);

  EncodedSource encode_source(Tape& tape, const std::vector<int>& x, Rng* dropout_rng = nullptr) const;
  EncodedRetrieved encode_retrieved(Tape& tape, const std::vector<int>& r, Rng* dropout_rng = nullptr) const;

  // β as a 1 × L_x row, computed left to right with the running summary s_j.
  Var extract_scores(Tape& tape, const EncodedSource& enc) const;

  DecoderState initial_state(Tape& tape, const EncodedSource& enc) const;

  // `beta` may be invalid (no rescaling); `ret` may be empty (c_ex = 0).
  DecodeStep decode_step(Tape& tape, int prev_token, const DecoderState& state, const EncodedSource& enc,
                         const EncodedRetrieved& ret, Var beta, const SourceMap& source,
                         Rng* dropout_rng = nullptr) const;

  struct Loss {
    Var total;      // Σ over tuples of L_e + L_g
    double extraction = 0.0;
    double generation = 0.0;
    size_t target_tokens = 0;
  };
  // Loss for tuples that share one source document (encoder run once).
  Loss document_loss(Tape& tape, const std::vector<const TrainingTuple*>& tuples, Rng* dropout_rng = nullptr) const;

  struct Generated {
    std::vector<ScoredPhrase> phrases;  // gs = exp(beam score), stemmed-unique
    std::vector<double> beta;           // empty when the extractor is off
  };
  Generated generate(const std::vector<int>& x, const SourceMap& source, const std::vector<int>& r,
                     const Vocabulary& vocab) const;

  void save(const std::string& path, const nlohmann::json& extra_meta = {}) const;
  static KgModel load(const std::string& path, nlohmann::json* meta_out = nullptr);

 private:
  struct Bidir {
    GruWeights fwd;
    GruWeights bwd;
  };

  Var embed_ids(Tape& tape, const std::vector<int>& ids, Rng* dropout_rng) const;
  // Returns the L×d memory; `ends` receives [→u_L; ←u_1].
  Var run_bidir(const Bidir& enc, Var inputs, Var* ends) const;

  ModelConfig config_;
  size_t vocab_tokens_ = 0;
  ParameterStore params_;
  Parameter* embedding_ = nullptr;
  Bidir enc_src_;
  Bidir enc_ret_;
  Parameter* w_d_ = nullptr;
  Parameter* b_d_ = nullptr;
  Parameter* w_c_ = nullptr;
  Parameter* w_s_ = nullptr;
  Parameter* w_n_ = nullptr;
  Parameter* b_ext_ = nullptr;
  GruWeights dec_;
  Parameter* w_in_ = nullptr;
  Parameter* w_ex_ = nullptr;
  Parameter* w_1_ = nullptr;
  Parameter* b_1_ = nullptr;
  Parameter* w_g_ = nullptr;
  Parameter* b_g_ = nullptr;
  Parameter* w_2_ = nullptr;
  Parameter* b_v_ = nullptr;
};

struct TrainLogEntry {
  size_t step = 0;
  size_t epoch = 0;
  double train_loss = 0.0;
  double extraction_loss = 0.0;
  double generation_loss = 0.0;
  double valid_ppl = 0.0;
  nlohmann::json to_json() const;
};

struct TrainResult {
  std::vector<TrainLogEntry> log;
  double initial_loss = 0.0;     // mean L_e + L_g per tuple before any update (eval mode)
  double best_valid_ppl = 0.0;
  size_t epochs_run = 0;
};

// Mean (L_e + L_g) per tuple, dropout off.
double mean_tuple_loss(const KgModel& model, const std::vector<TrainingTuple>& tuples);
double validation_perplexity(const KgModel& model, const std::vector<TrainingTuple>& tuples);

// Adam over shuffled batches, global-norm clipping, validation perplexity at
// the configured cadence, early stopping after `patience` evaluations without
// improvement. The model ends holding the best-validation parameters.
TrainResult train(KgModel& model, const std::vector<TrainingTuple>& train_set,
                  const std::vector<TrainingTuple>& valid_set, uint64_t seed,
                  const std::function<void(const TrainLogEntry&)>& on_eval = {});

}  // namespace kpgen
