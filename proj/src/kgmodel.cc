#include "kpgen/kgmodel.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "kpgen/io.h"
#include "kpgen/porter.h"

namespace kpgen {

using json = nlohmann::json;

namespace {
constexpr double kLogClamp = 1e-12;
constexpr const char* kCheckpointKind = "kgmodel";
}  // namespace

std::string to_string(Mode m) {
  switch (m) {
    case Mode::KgKe: return "KG-KE";
    case Mode::KgKr: return "KG-KR";
    case Mode::KgKeKr: return "KG-KE-KR";
  }
  return "?";
}

Mode parse_mode(const std::string& s) {
  if (s == "KG-KE") return Mode::KgKe;
  if (s == "KG-KR") return Mode::KgKr;
  if (s == "KG-KE-KR") return Mode::KgKeKr;
  throw std::invalid_argument("unknown model mode '" + s + "'");
}

void ModelConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0)) throw std::invalid_argument(std::string("model config: ") + name + " must be positive");
  };
  positive(static_cast<double>(embedding_dim), "embedding_dim");
  positive(static_cast<double>(hidden_dim), "hidden_dim");
  positive(static_cast<double>(vocab_size), "vocab_size");
  positive(pos_loss_weight, "pos_loss_weight");
  positive(static_cast<double>(batch_size), "batch_size");
  positive(lr, "lr");
  positive(max_grad_norm, "max_grad_norm");
  positive(init_range, "init_range");
  positive(static_cast<double>(beam_depth), "beam_depth");
  positive(static_cast<double>(beam_size), "beam_size");
  positive(static_cast<double>(max_source_len), "max_source_len");
  positive(static_cast<double>(max_epochs), "max_epochs");
  positive(static_cast<double>(patience), "patience");
  if (hidden_dim % 2 != 0) throw std::invalid_argument("model config: hidden_dim must be even");
  if (dropout < 0 || dropout >= 1) throw std::invalid_argument("model config: dropout must be in [0, 1)");
}

json ModelConfig::to_json() const {
  return json{{"embedding_dim", embedding_dim}, {"hidden_dim", hidden_dim},
              {"vocab_size", vocab_size},       {"pos_loss_weight", pos_loss_weight},
              {"dropout", dropout},             {"batch_size", batch_size},
              {"lr", lr},                       {"max_grad_norm", max_grad_norm},
              {"init_range", init_range},       {"beam_depth", beam_depth},
              {"beam_size", beam_size},         {"length_normalize", length_normalize},
              {"max_source_len", max_source_len}, {"max_epochs", max_epochs},
              {"patience", patience},           {"eval_every", eval_every},
              {"mode", to_string(mode)}};
}

ModelConfig ModelConfig::from_json(const json& j) {
  ModelConfig c;
  c.embedding_dim = j.at("embedding_dim").get<size_t>();
  c.hidden_dim = j.at("hidden_dim").get<size_t>();
  c.vocab_size = j.at("vocab_size").get<size_t>();
  c.pos_loss_weight = j.at("pos_loss_weight").get<double>();
  c.dropout = j.at("dropout").get<double>();
  c.batch_size = j.at("batch_size").get<size_t>();
  c.lr = j.at("lr").get<double>();
  c.max_grad_norm = j.at("max_grad_norm").get<double>();
  c.init_range = j.at("init_range").get<double>();
  c.beam_depth = j.at("beam_depth").get<size_t>();
  c.beam_size = j.at("beam_size").get<size_t>();
  c.length_normalize = j.at("length_normalize").get<bool>();
  c.max_source_len = j.at("max_source_len").get<size_t>();
  c.max_epochs = j.at("max_epochs").get<size_t>();
  c.patience = j.at("patience").get<size_t>();
  c.eval_every = j.at("eval_every").get<size_t>();
  c.mode = parse_mode(j.at("mode").get<std::string>());
  return c;
}

std::pair<Var, Var> attend(Var h, Var memory, Var memory_t, Var w) {
  if (!memory.valid() || memory.rows() == 0) throw std::invalid_argument("attend: empty memory");
  Var weights = softmax_rows(matmul(matmul(h, w), memory_t));
  return {matmul(weights, memory), weights};
}

Var rescale_copy(Var alpha_in, Var beta) {
  Var scaled = mul(alpha_in, beta);
  Var total = sum(scaled);
  if (!(total.scalar() > 0)) throw NumericError("rescale_copy: importance-weighted attention sums to zero");
  return scale_by(scaled, reciprocal(total));
}

Var extraction_loss(Var beta, const std::vector<int>& beta_star, double pos_weight) {
  const size_t n = beta.cols();
  if (beta.rows() != 1 || n != beta_star.size())
    throw ShapeError("extraction_loss: beta " + beta.value().shape_str() + " vs " +
                     std::to_string(beta_star.size()) + " labels");
  Matrix pos(1, n), neg(1, n);
  for (size_t j = 0; j < n; ++j) {
    pos[j] = beta_star[j] ? pos_weight : 0.0;
    neg[j] = beta_star[j] ? 0.0 : 1.0;
  }
  Tape& tape = *beta.tape;
  Var log_b = log(beta, kLogClamp);
  Var log_nb = log(affine(beta, -1.0, 1.0), kLogClamp);
  Var terms = add(mul(log_b, tape.constant(std::move(pos))), mul(log_nb, tape.constant(std::move(neg))));
  return scale(sum(terms), -1.0 / static_cast<double>(n));
}

Var generation_loss(const std::vector<Var>& step_dists, const std::vector<int>& targets) {
  if (step_dists.size() != targets.size())
    throw ShapeError("generation_loss: " + std::to_string(step_dists.size()) + " steps vs " +
                     std::to_string(targets.size()) + " targets");
  std::vector<Var> picks;
  for (size_t t = 0; t < targets.size(); ++t) {
    if (targets[t] < 0) continue;
    picks.push_back(pick(step_dists[t], 0, static_cast<size_t>(targets[t])));
  }
  if (picks.empty()) {
    if (step_dists.empty()) throw std::invalid_argument("generation_loss: no steps");
    return step_dists[0].tape->constant(Matrix(1, 1, 0.0));
  }
  return scale(sum(log(concat_cols(picks), kLogClamp)), -1.0);
}

// Model ----------------------------------------------------------------------

KgModel::KgModel(ModelConfig config, size_t vocab_tokens) : config_(config), vocab_tokens_(vocab_tokens) {
  config_.validate();
  if (vocab_tokens_ <= static_cast<size_t>(Vocabulary::kNumReserved))
    throw std::invalid_argument("KgModel: vocabulary has no content tokens");
  const size_t e = config_.embedding_dim;
  const size_t d = config_.hidden_dim;
  const size_t half = d / 2;
  embedding_ = &params_.add("embedding", vocab_tokens_, e);
  enc_src_ = {GruWeights::create(params_, "enc_src.fwd", e, half), GruWeights::create(params_, "enc_src.bwd", e, half)};
  enc_ret_ = {GruWeights::create(params_, "enc_ret.fwd", e, half), GruWeights::create(params_, "enc_ret.bwd", e, half)};
  w_d_ = &params_.add("doc.W_d", d, d);
  b_d_ = &params_.add("doc.b_d", 1, d);
  w_c_ = &params_.add("ext.W_c", d, 1);
  w_s_ = &params_.add("ext.W_s", d, d);
  w_n_ = &params_.add("ext.W_n", d, d);
  b_ext_ = &params_.add("ext.b", 1, 1);
  dec_ = GruWeights::create(params_, "dec", e + d, d);
  w_in_ = &params_.add("dec.W_in", d, d);
  w_ex_ = &params_.add("dec.W_ex", d, d);
  w_1_ = &params_.add("dec.W_1", 3 * d, d);
  b_1_ = &params_.add("dec.b_1", 1, d);
  w_g_ = &params_.add("dec.w_g", d, 1);
  b_g_ = &params_.add("dec.b_g", 1, 1);
  w_2_ = &params_.add("dec.W_2", d, vocab_tokens_);
  b_v_ = &params_.add("dec.b_v", 1, vocab_tokens_);
}

void KgModel::init(uint64_t seed) {
  Rng rng(seed);
  params_.init_uniform(rng, config_.init_range);
}

Var KgModel::embed_ids(Tape& tape, const std::vector<int>& ids, Rng* dropout_rng) const {
  std::vector<int> safe(ids.size());
  for (size_t i = 0; i < ids.size(); ++i)
    safe[i] = (ids[i] >= 0 && static_cast<size_t>(ids[i]) < vocab_tokens_) ? ids[i] : Vocabulary::kUnk;
  return dropout(embed(tape.param(*embedding_), safe), config_.dropout, dropout_rng);
}

Var KgModel::run_bidir(const Bidir& enc, Var inputs, Var* ends) const {
  auto fwd = gru_scan(inputs, enc.fwd, false);
  auto bwd = gru_scan(inputs, enc.bwd, true);
  std::vector<Var> rows;
  rows.reserve(fwd.size());
  for (size_t i = 0; i < fwd.size(); ++i) rows.push_back(concat_cols({fwd[i], bwd[i]}));
  if (ends) *ends = concat_cols({fwd.back(), bwd.front()});
  return concat_rows(rows);
}

EncodedSource KgModel::encode_source(Tape& tape, const std::vector<int>& x, Rng* dropout_rng) const {
  if (x.empty()) throw std::invalid_argument("encode_source: empty source");
  EncodedSource enc;
  enc.memory = run_bidir(enc_src_, embed_ids(tape, x, dropout_rng), &enc.h0);
  enc.memory_t = transpose(enc.memory);
  enc.doc_vec = tanh(add_bias(matmul(enc.h0, tape.param(*w_d_)), tape.param(*b_d_)));
  return enc;
}

EncodedRetrieved KgModel::encode_retrieved(Tape& tape, const std::vector<int>& r, Rng* dropout_rng) const {
  EncodedRetrieved enc;
  if (r.empty()) return enc;
  enc.memory = run_bidir(enc_ret_, embed_ids(tape, r, dropout_rng), nullptr);
  enc.memory_t = transpose(enc.memory);
  return enc;
}

Var KgModel::extract_scores(Tape& tape, const EncodedSource& enc) const {
  const size_t n = enc.memory.rows();
  const size_t d = config_.hidden_dim;
  // Content and salience terms do not depend on s_j, so they are computed for all rows at once.
  Var static_part = matmul(enc.memory, add(tape.param(*w_c_), matmul(tape.param(*w_s_), transpose(enc.doc_vec))));
  Var projected = matmul(enc.memory, tape.param(*w_n_));
  Var bias = tape.param(*b_ext_);
  Var s = tape.constant(Matrix(1, d, 0.0));
  std::vector<Var> betas;
  betas.reserve(n);
  for (size_t j = 0; j < n; ++j) {
    Var novelty = matmul(slice_rows(projected, j, 1), transpose(tanh(s)));
    Var beta = sigmoid(add(sub(slice_rows(static_part, j, 1), novelty), bias));
    betas.push_back(beta);
    if (j + 1 < n) s = add(s, scale_by(slice_rows(enc.memory, j, 1), beta));
  }
  return concat_cols(betas);
}

DecoderState KgModel::initial_state(Tape& tape, const EncodedSource& enc) const {
  return {enc.h0, tape.constant(Matrix(1, config_.hidden_dim, 0.0))};
}

DecodeStep KgModel::decode_step(Tape& tape, int prev_token, const DecoderState& state, const EncodedSource& enc,
                                const EncodedRetrieved& ret, Var beta, const SourceMap& source,
                                Rng* dropout_rng) const {
  const size_t d = config_.hidden_dim;
  const size_t ext_size = vocab_tokens_ + source.oov_tokens.size();
  if (source.ext_ids.size() != enc.memory.rows())
    throw ShapeError("decode_step: source map has " + std::to_string(source.ext_ids.size()) + " ids, memory has " +
                     std::to_string(enc.memory.rows()) + " rows");

  DecodeStep out;
  Var e_prev = embed_ids(tape, {prev_token}, dropout_rng);
  Var h = gru_cell(concat_cols({e_prev, state.h_tilde}), state.h, dec_);

  auto [c_in, alpha_in] = attend(h, enc.memory, enc.memory_t, tape.param(*w_in_));
  Var c_ex;
  if (ret.empty()) {
    c_ex = tape.constant(Matrix(1, d, 0.0));
  } else {
    auto [ctx, weights] = attend(h, ret.memory, ret.memory_t, tape.param(*w_ex_));
    c_ex = ctx;
    out.alpha_ex = weights;
  }
  Var h_tilde = tanh(add_bias(matmul(concat_cols({c_in, c_ex, h}), tape.param(*w_1_)), tape.param(*b_1_)));
  Var h_out = dropout(h_tilde, config_.dropout, dropout_rng);

  Var gate = sigmoid(add_bias(matmul(h_out, tape.param(*w_g_)), tape.param(*b_g_)));
  Var p_vocab = softmax_rows(add_bias(matmul(h_out, tape.param(*w_2_)), tape.param(*b_v_)));
  Var alpha_copy = beta.valid() ? rescale_copy(alpha_in, beta) : alpha_in;
  Var p_copy = scatter_cols(alpha_copy, source.ext_ids, ext_size);
  Var dist = add(scale_by(pad_cols(p_vocab, ext_size), affine(gate, -1.0, 1.0)), scale_by(p_copy, gate));

  out.dist = dist;
  out.state = {h, h_tilde};
  out.gate = gate;
  out.alpha_in = alpha_in;
  out.alpha_copy = alpha_copy;
  out.p_vocab = p_vocab;
  return out;
}

KgModel::Loss KgModel::document_loss(Tape& tape, const std::vector<const TrainingTuple*>& tuples,
                                     Rng* dropout_rng) const {
  if (tuples.empty()) throw std::invalid_argument("document_loss: no tuples");
  const TrainingTuple& first = *tuples.front();
  const bool extractor = uses_extractor(config_.mode);
  EncodedSource enc = encode_source(tape, first.x.ids, dropout_rng);
  EncodedRetrieved ret;
  if (uses_retrieval(config_.mode)) ret = encode_retrieved(tape, first.r, dropout_rng);
  Var beta;
  Var le;
  Loss loss;
  std::vector<Var> terms;
  if (extractor) {
    beta = extract_scores(tape, enc);
    le = extraction_loss(beta, first.beta_star, config_.pos_loss_weight);
    loss.extraction = le.scalar() * static_cast<double>(tuples.size());
    terms.push_back(scale(le, static_cast<double>(tuples.size())));
  }
  for (const TrainingTuple* t : tuples) {
    if (t->x.ext_ids != first.x.ext_ids || t->r != first.r)
      throw std::invalid_argument("document_loss: tuples of " + first.doc_id + " do not share a source");
    DecoderState state = initial_state(tape, enc);
    std::vector<Var> dists;
    int prev = Vocabulary::kBos;
    for (size_t step = 0; step < t->y.size(); ++step) {
      DecodeStep ds = decode_step(tape, prev, state, enc, ret, beta, t->x, dropout_rng);
      dists.push_back(ds.dist);
      state = ds.state;
      prev = t->y[step];
    }
    Var lg = generation_loss(dists, t->y_target);
    loss.generation += lg.scalar();
    for (int target : t->y_target) loss.target_tokens += target >= 0 ? 1 : 0;
    terms.push_back(lg);
  }
  loss.total = terms.size() == 1 ? terms[0] : sum(concat_cols(terms));
  return loss;
}

KgModel::Generated KgModel::generate(const std::vector<int>& x, const SourceMap& source, const std::vector<int>& r,
                                     const Vocabulary& vocab) const {
  if (vocab.size() != vocab_tokens_) throw std::invalid_argument("generate: vocabulary size does not match model");
  Tape tape;
  tape.set_grad_enabled(false);
  EncodedSource enc = encode_source(tape, x);
  EncodedRetrieved ret;
  if (uses_retrieval(config_.mode)) ret = encode_retrieved(tape, r);
  Generated out;
  Var beta;
  if (uses_extractor(config_.mode)) {
    beta = extract_scores(tape, enc);
    out.beta = beta.value().values();
  }
  const size_t base = tape.size();

  struct State {
    Matrix h;
    Matrix h_tilde;
  };
  std::function<std::pair<std::vector<double>, State>(const State&, int)> step =
      [&](const State& s, int last) {
        DecoderState ds{tape.constant(s.h), tape.constant(s.h_tilde)};
        DecodeStep res = decode_step(tape, last, ds, enc, ret, beta, source);
        std::vector<double> logp(res.dist.value().values());
        for (double& p : logp) p = p > 0 ? std::log(p) : -INFINITY;
        State next{res.state.h.value(), res.state.h_tilde.value()};
        tape.truncate(base);
        return std::make_pair(std::move(logp), std::move(next));
      };

  BeamOptions opts;
  opts.depth = config_.beam_depth;
  opts.size = config_.beam_size;
  opts.eos = Vocabulary::kEos;
  opts.length_normalize = config_.length_normalize;
  opts.banned = {Vocabulary::kPad, Vocabulary::kUnk, Vocabulary::kBos, Vocabulary::kSep};
  State init{enc.h0.value(), Matrix(1, config_.hidden_dim, 0.0)};
  auto hyps = beam_search<State>(std::move(init), Vocabulary::kBos, step, opts);

  std::vector<ScoredPhrase> phrases;
  phrases.reserve(hyps.size());
  for (const auto& hyp : hyps) {
    ScoredPhrase p;
    for (int id : hyp.tokens) {
      const auto u = static_cast<size_t>(id);
      p.tokens.push_back(u < vocab_tokens_ ? vocab.token_of(id) : source.oov_tokens.at(u - vocab_tokens_));
    }
    p.score = std::exp(hyp.score);
    phrases.push_back(std::move(p));
  }
  out.phrases = dedup_keep_max(std::move(phrases));
  return out;
}

void KgModel::save(const std::string& path, const json& extra_meta) const {
  json meta = extra_meta.is_object() ? extra_meta : json::object();
  meta["config"] = config_.to_json();
  meta["vocab_tokens"] = vocab_tokens_;
  save_checkpoint(path, kCheckpointKind, meta, params_);
}

KgModel KgModel::load(const std::string& path, json* meta_out) {
  json meta = read_checkpoint_meta(path, kCheckpointKind);
  KgModel model(ModelConfig::from_json(meta.at("config")), meta.at("vocab_tokens").get<size_t>());
  load_checkpoint(path, kCheckpointKind, model.params_);
  if (meta_out) *meta_out = std::move(meta);
  return model;
}

// Training -------------------------------------------------------------------

json TrainLogEntry::to_json() const {
  return json{{"step", step},
              {"epoch", epoch},
              {"train_loss", train_loss},
              {"L_e", extraction_loss},
              {"L_g", generation_loss},
              {"valid_ppl", valid_ppl}};
}

namespace {

// Tuples grouped by shared source, in first-appearance order.
std::vector<std::vector<const TrainingTuple*>> group_by_doc(const std::vector<const TrainingTuple*>& tuples) {
  std::vector<std::vector<const TrainingTuple*>> groups;
  std::map<std::string, size_t> slot;
  for (const TrainingTuple* t : tuples) {
    auto [it, fresh] = slot.emplace(t->doc_id, groups.size());
    if (fresh) groups.emplace_back();
    groups[it->second].push_back(t);
  }
  return groups;
}

struct EvalTotals {
  double loss = 0.0;
  double generation = 0.0;
  size_t tokens = 0;
};

EvalTotals evaluate_tuples(const KgModel& model, const std::vector<TrainingTuple>& tuples) {
  std::vector<const TrainingTuple*> ptrs;
  for (const auto& t : tuples) ptrs.push_back(&t);
  EvalTotals totals;
  for (const auto& group : group_by_doc(ptrs)) {
    Tape tape;
    tape.set_grad_enabled(false);
    auto loss = model.document_loss(tape, group);
    totals.loss += loss.total.scalar();
    totals.generation += loss.generation;
    totals.tokens += loss.target_tokens;
  }
  return totals;
}

}  // namespace

double mean_tuple_loss(const KgModel& model, const std::vector<TrainingTuple>& tuples) {
  if (tuples.empty()) throw std::invalid_argument("mean_tuple_loss: no tuples");
  return evaluate_tuples(model, tuples).loss / static_cast<double>(tuples.size());
}

double validation_perplexity(const KgModel& model, const std::vector<TrainingTuple>& tuples) {
  if (tuples.empty()) throw std::invalid_argument("validation_perplexity: no tuples");
  auto totals = evaluate_tuples(model, tuples);
  if (totals.tokens == 0) throw std::invalid_argument("validation_perplexity: no scorable target tokens");
  return std::exp(totals.generation / static_cast<double>(totals.tokens));
}

TrainResult train(KgModel& model, const std::vector<TrainingTuple>& train_set,
                  const std::vector<TrainingTuple>& valid_set, uint64_t seed,
                  const std::function<void(const TrainLogEntry&)>& on_eval) {
  if (train_set.empty()) throw std::invalid_argument("train: empty training set");
  if (valid_set.empty()) throw std::invalid_argument("train: empty validation set");
  const ModelConfig& cfg = model.config();
  Rng order_rng(seed ^ 0x5eed0001ULL);
  Rng dropout_rng(seed ^ 0x5eed0002ULL);
  Adam adam(AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});
  auto params = model.params().all();

  TrainResult result;
  result.initial_loss = mean_tuple_loss(model, train_set);
  result.best_valid_ppl = INFINITY;
  std::vector<Matrix> best;
  size_t since_best = 0;
  size_t step = 0;
  double window_loss = 0.0, window_le = 0.0, window_lg = 0.0;
  size_t window_tuples = 0;
  bool stop = false;

  // Whole documents are shuffled and packed into batches of at least
  // batch_size tuples, so each source is encoded once per update.
  std::vector<std::vector<size_t>> docs;
  {
    std::map<std::string, size_t> slot;
    for (size_t i = 0; i < train_set.size(); ++i) {
      auto [it, fresh] = slot.emplace(train_set[i].doc_id, docs.size());
      if (fresh) docs.emplace_back();
      docs[it->second].push_back(i);
    }
  }
  std::vector<size_t> order(docs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  auto evaluate = [&](size_t epoch) {
    TrainLogEntry entry;
    entry.step = step;
    entry.epoch = epoch;
    const double denom = window_tuples ? static_cast<double>(window_tuples) : 1.0;
    entry.train_loss = window_loss / denom;
    entry.extraction_loss = window_le / denom;
    entry.generation_loss = window_lg / denom;
    entry.valid_ppl = validation_perplexity(model, valid_set);
    window_loss = window_le = window_lg = 0.0;
    window_tuples = 0;
    result.log.push_back(entry);
    if (on_eval) on_eval(entry);
    if (entry.valid_ppl < result.best_valid_ppl) {
      result.best_valid_ppl = entry.valid_ppl;
      best.clear();
      for (const Parameter* p : params) best.push_back(p->value);
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      stop = true;
    }
  };

  for (size_t epoch = 1; epoch <= cfg.max_epochs && !stop; ++epoch) {
    order_rng.shuffle(order.begin(), order.end());
    for (size_t next = 0; next < order.size() && !stop;) {
      std::vector<const TrainingTuple*> batch;
      while (next < order.size() && batch.size() < cfg.batch_size)
        for (size_t i : docs[order[next++]]) batch.push_back(&train_set[i]);

      Tape tape;
      tape.set_training(true);
      model.params().zero_grad();
      std::vector<Var> doc_losses;
      double le = 0.0, lg = 0.0;
      try {
        for (const auto& group : group_by_doc(batch)) {
          auto loss = model.document_loss(tape, group, &dropout_rng);
          doc_losses.push_back(loss.total);
          le += loss.extraction;
          lg += loss.generation;
        }
        Var total = scale(sum(concat_cols(doc_losses)), 1.0 / static_cast<double>(batch.size()));
        tape.backward(total);
        clip_global_norm(params, cfg.max_grad_norm);
        adam.step(params);
        window_loss += total.scalar() * static_cast<double>(batch.size());
      } catch (const NumericError& e) {
        std::ostringstream msg;
        msg << "training diverged at step " << step + 1 << " (epoch " << epoch << "): " << e.what();
        throw NumericError(msg.str());
      }
      ++step;
      window_le += le;
      window_lg += lg;
      window_tuples += batch.size();
      if (cfg.eval_every > 0 && step % cfg.eval_every == 0) evaluate(epoch);
    }
    result.epochs_run = epoch;
    if (cfg.eval_every == 0 && !stop) evaluate(epoch);
  }
  if (!best.empty()) {
    for (size_t i = 0; i < params.size(); ++i) params[i]->value = best[i];
  }
  return result;
}

}  // namespace kpgen
