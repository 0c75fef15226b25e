#include "kpgen/scorer.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "kpgen/io.h"
#include "kpgen/porter.h"

namespace kpgen {

using json = nlohmann::json;

namespace {
constexpr const char* kCheckpointKind = "scorer";
constexpr double kLogClamp = 1e-12;
}  // namespace

void ScorerConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0)) throw std::invalid_argument(std::string("scorer config: ") + name + " must be positive");
  };
  positive(static_cast<double>(embedding_dim), "embedding_dim");
  positive(static_cast<double>(hidden_dim), "hidden_dim");
  positive(static_cast<double>(attend_dim), "attend_dim");
  positive(static_cast<double>(aggregate_dim), "aggregate_dim");
  positive(lr, "lr");
  positive(static_cast<double>(batch_size), "batch_size");
  positive(max_grad_norm, "max_grad_norm");
  positive(init_range, "init_range");
  positive(static_cast<double>(max_epochs), "max_epochs");
  positive(static_cast<double>(patience), "patience");
  positive(static_cast<double>(max_source_len), "max_source_len");
  positive(static_cast<double>(negative_ratio), "negative_ratio");
  if (hidden_dim % 2 != 0) throw std::invalid_argument("scorer config: hidden_dim must be even");
  if (dropout < 0 || dropout >= 1) throw std::invalid_argument("scorer config: dropout must be in [0, 1)");
  if (span_fraction < 0 || span_fraction > 1) throw std::invalid_argument("scorer config: span_fraction must be in [0, 1]");
}

json ScorerConfig::to_json() const {
  return json{{"embedding_dim", embedding_dim}, {"hidden_dim", hidden_dim},
              {"attend_dim", attend_dim},       {"aggregate_dim", aggregate_dim},
              {"dropout", dropout},             {"lr", lr},
              {"batch_size", batch_size},       {"max_grad_norm", max_grad_norm},
              {"init_range", init_range},       {"max_epochs", max_epochs},
              {"patience", patience},           {"max_source_len", max_source_len},
              {"negative_ratio", negative_ratio}, {"span_fraction", span_fraction}};
}

ScorerConfig ScorerConfig::from_json(const json& j) {
  ScorerConfig c;
  c.embedding_dim = j.at("embedding_dim").get<size_t>();
  c.hidden_dim = j.at("hidden_dim").get<size_t>();
  c.attend_dim = j.at("attend_dim").get<size_t>();
  c.aggregate_dim = j.at("aggregate_dim").get<size_t>();
  c.dropout = j.at("dropout").get<double>();
  c.lr = j.at("lr").get<double>();
  c.batch_size = j.at("batch_size").get<size_t>();
  c.max_grad_norm = j.at("max_grad_norm").get<double>();
  c.init_range = j.at("init_range").get<double>();
  c.max_epochs = j.at("max_epochs").get<size_t>();
  c.patience = j.at("patience").get<size_t>();
  c.max_source_len = j.at("max_source_len").get<size_t>();
  c.negative_ratio = j.at("negative_ratio").get<size_t>();
  c.span_fraction = j.at("span_fraction").get<double>();
  return c;
}

Scorer::Scorer(ScorerConfig config, size_t vocab_tokens) : config_(config), vocab_tokens_(vocab_tokens) {
  config_.validate();
  if (vocab_tokens_ == 0) throw std::invalid_argument("Scorer: empty vocabulary");
  const size_t e = config_.embedding_dim;
  const size_t h = config_.hidden_dim;
  const size_t f = config_.attend_dim;
  embedding_ = &params_.add("embedding", vocab_tokens_, e);
  doc_fwd_ = GruWeights::create(params_, "enc_doc.fwd", e, h / 2);
  doc_bwd_ = GruWeights::create(params_, "enc_doc.bwd", e, h / 2);
  cand_fwd_ = GruWeights::create(params_, "enc_cand.fwd", e, h / 2);
  cand_bwd_ = GruWeights::create(params_, "enc_cand.bwd", e, h / 2);
  w_f_ = &params_.add("attend.W_f", h, f);
  b_f_ = &params_.add("attend.b_f", 1, f);
  w_g_ = &params_.add("compare.W_g", 2 * h, f);
  b_g_ = &params_.add("compare.b_g", 1, f);
  w_h_ = &params_.add("aggregate.W_h", 2 * f, config_.aggregate_dim);
  b_h_ = &params_.add("aggregate.b_h", 1, config_.aggregate_dim);
  w_o_ = &params_.add("aggregate.w_o", config_.aggregate_dim, 1);
  b_o_ = &params_.add("aggregate.b_o", 1, 1);
}

void Scorer::init(uint64_t seed) {
  Rng rng(seed);
  params_.init_uniform(rng, config_.init_range);
}

Var Scorer::encode(Tape& tape, const GruWeights& fwd, const GruWeights& bwd, const std::vector<int>& ids,
                   Rng* dropout_rng) const {
  std::vector<int> safe(ids.size());
  for (size_t i = 0; i < ids.size(); ++i)
    safe[i] = (ids[i] >= 0 && static_cast<size_t>(ids[i]) < vocab_tokens_) ? ids[i] : Vocabulary::kUnk;
  Var emb = dropout(embed(tape.param(*embedding_), safe), config_.dropout, dropout_rng);
  auto f = gru_scan(emb, fwd, false);
  auto b = gru_scan(emb, bwd, true);
  std::vector<Var> rows;
  rows.reserve(f.size());
  for (size_t i = 0; i < f.size(); ++i) rows.push_back(concat_cols({f[i], b[i]}));
  return concat_rows(rows);
}

Scorer::DocEncoding Scorer::encode_document(Tape& tape, const std::vector<int>& doc, Rng* dropout_rng) const {
  if (doc.empty()) throw std::invalid_argument("scorer: empty document");
  DocEncoding enc;
  enc.a = encode(tape, doc_fwd_, doc_bwd_, doc, dropout_rng);
  enc.f_a = tanh(add_bias(matmul(enc.a, tape.param(*w_f_)), tape.param(*b_f_)));
  return enc;
}

Var Scorer::logit(Tape& tape, const DocEncoding& doc, const std::vector<int>& candidate, Rng* dropout_rng) const {
  if (candidate.empty()) throw std::invalid_argument("scorer: empty candidate");
  Var b = encode(tape, cand_fwd_, cand_bwd_, candidate, dropout_rng);
  Var f_b = tanh(add_bias(matmul(b, tape.param(*w_f_)), tape.param(*b_f_)));
  Var e = matmul(doc.f_a, transpose(f_b));
  Var beta = matmul(softmax_rows(e), b);
  Var alpha = matmul(softmax_rows(transpose(e)), doc.a);
  Var w_g = tape.param(*w_g_);
  Var b_g = tape.param(*b_g_);
  Var g_a = tanh(add_bias(matmul(concat_cols({doc.a, beta}), w_g), b_g));
  Var g_b = tanh(add_bias(matmul(concat_cols({b, alpha}), w_g), b_g));
  Var v = concat_cols({mean_rows(g_a), mean_rows(g_b)});
  Var hidden = dropout(tanh(add_bias(matmul(v, tape.param(*w_h_)), tape.param(*b_h_))), config_.dropout, dropout_rng);
  return add_bias(matmul(hidden, tape.param(*w_o_)), tape.param(*b_o_));
}

std::vector<double> Scorer::score_all(const std::vector<int>& doc, const std::vector<std::vector<int>>& candidates) const {
  Tape tape;
  tape.set_grad_enabled(false);
  DocEncoding enc = encode_document(tape, doc);
  const size_t base = tape.size();
  std::vector<double> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) {
    out.push_back(sigmoid(logit(tape, enc, c)).scalar());
    tape.truncate(base);
  }
  return out;
}

double Scorer::score(const std::vector<int>& doc, const std::vector<int>& candidate) const {
  return score_all(doc, {candidate}).front();
}

void Scorer::save(const std::string& path, const json& extra_meta) const {
  json meta = extra_meta.is_object() ? extra_meta : json::object();
  meta["config"] = config_.to_json();
  meta["vocab_tokens"] = vocab_tokens_;
  save_checkpoint(path, kCheckpointKind, meta, params_);
}

Scorer Scorer::load(const std::string& path, json* meta_out) {
  json meta = read_checkpoint_meta(path, kCheckpointKind);
  Scorer scorer(ScorerConfig::from_json(meta.at("config")), meta.at("vocab_tokens").get<size_t>());
  load_checkpoint(path, kCheckpointKind, scorer.params_);
  if (meta_out) *meta_out = std::move(meta);
  return scorer;
}

std::vector<int> to_ids(const Tokens& tokens, const Vocabulary& vocab, size_t max_len) {
  const size_t n = max_len ? std::min(max_len, tokens.size()) : tokens.size();
  std::vector<int> ids(n);
  for (size_t i = 0; i < n; ++i) ids[i] = vocab.index_of(tokens[i]);
  return ids;
}

std::vector<Tokens> sample_negatives(const TokenizedDoc& doc, const std::vector<Tokens>& retrieved, size_t n_neg,
                                     double span_fraction, Rng& rng) {
  if (n_neg < 1) throw std::invalid_argument("sample_negatives: n_neg must be >= 1");
  std::set<std::string> gold;
  for (const auto& g : doc.gold_phrases) gold.insert(stem_phrase(g));

  // Pools are built in a fixed order and deduplicated by stemmed form, then shuffled with the seeded rng.
  std::set<std::string> seen;
  std::vector<Tokens> spans;
  for (size_t i = 0; i < doc.tokens.size(); ++i) {
    for (size_t len = 1; len <= 3 && i + len <= doc.tokens.size(); ++len) {
      if (is_punctuation_token(doc.tokens[i + len - 1])) break;
      Tokens span(doc.tokens.begin() + static_cast<std::ptrdiff_t>(i),
                  doc.tokens.begin() + static_cast<std::ptrdiff_t>(i + len));
      const std::string key = stem_phrase(span);
      if (gold.count(key) || !seen.insert(key).second) continue;
      spans.push_back(std::move(span));
    }
  }
  std::vector<Tokens> from_retrieved;
  for (const auto& r : retrieved) {
    if (r.empty()) continue;
    const std::string key = stem_phrase(r);
    if (gold.count(key)) continue;
    from_retrieved.push_back(r);
  }
  rng.shuffle(spans.begin(), spans.end());
  rng.shuffle(from_retrieved.begin(), from_retrieved.end());

  const auto want_spans = static_cast<size_t>(std::llround(span_fraction * static_cast<double>(n_neg)));
  std::vector<Tokens> out;
  std::set<std::string> taken;
  size_t si = 0, ri = 0;
  auto take_from = [&](std::vector<Tokens>& pool, size_t& idx, size_t limit) {
    while (out.size() < limit && idx < pool.size()) {
      Tokens& cand = pool[idx++];
      if (taken.insert(stem_phrase(cand)).second) out.push_back(cand);
    }
  };
  take_from(spans, si, std::min(n_neg, want_spans));
  take_from(from_retrieved, ri, n_neg);
  take_from(spans, si, n_neg);
  return out;
}

std::vector<ScorerExample> make_scorer_examples(const TokenizedDoc& doc, const std::vector<Tokens>& retrieved,
                                                const Vocabulary& vocab, const ScorerConfig& config, Rng& rng) {
  std::vector<ScorerExample> out;
  const auto doc_ids = to_ids(doc.tokens, vocab, config.max_source_len);
  if (doc_ids.empty() || doc.gold_phrases.empty()) return out;
  for (const auto& g : doc.gold_phrases)
    if (!g.empty()) out.push_back({doc.doc_id, doc_ids, to_ids(g, vocab), 1});
  const size_t positives = out.size();
  if (positives == 0) return out;
  for (auto& neg : sample_negatives(doc, retrieved, config.negative_ratio * positives, config.span_fraction, rng))
    out.push_back({doc.doc_id, doc_ids, to_ids(neg, vocab), 0});
  return out;
}

json ScorerLogEntry::to_json() const {
  return json{{"epoch", epoch},
              {"train_loss", train_loss},
              {"train_accuracy", train_accuracy},
              {"valid_accuracy", valid_accuracy}};
}

namespace {

std::vector<std::vector<const ScorerExample*>> group_by_doc(const std::vector<const ScorerExample*>& examples) {
  std::vector<std::vector<const ScorerExample*>> groups;
  std::map<std::string, size_t> slot;
  for (const ScorerExample* ex : examples) {
    auto [it, fresh] = slot.emplace(ex->doc_id, groups.size());
    if (fresh) groups.emplace_back();
    groups[it->second].push_back(ex);
  }
  return groups;
}

Var bce(Var logit, int label) {
  Var p = sigmoid(logit);
  return label ? scale(log(p, kLogClamp), -1.0) : scale(log(affine(p, -1.0, 1.0), kLogClamp), -1.0);
}

}  // namespace

double scorer_accuracy(const Scorer& scorer, const std::vector<ScorerExample>& examples) {
  if (examples.empty()) return 0.0;
  std::vector<const ScorerExample*> ptrs;
  for (const auto& ex : examples) ptrs.push_back(&ex);
  size_t correct = 0;
  for (const auto& group : group_by_doc(ptrs)) {
    std::vector<std::vector<int>> cands;
    for (const auto* ex : group) cands.push_back(ex->candidate);
    auto probs = scorer.score_all(group.front()->doc, cands);
    for (size_t i = 0; i < group.size(); ++i) correct += ((probs[i] >= 0.5) == (group[i]->label == 1)) ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

ScorerTrainResult train_scorer(Scorer& scorer, const std::vector<ScorerExample>& train_set,
                               const std::vector<ScorerExample>& valid_set, uint64_t seed,
                               const std::function<void(const ScorerLogEntry&)>& on_epoch) {
  bool has_pos = false, has_neg = false;
  for (const auto& ex : train_set) (ex.label ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) throw std::invalid_argument("train_scorer: training data needs both labels");
  const ScorerConfig& cfg = scorer.config();
  const auto& eval_set = valid_set.empty() ? train_set : valid_set;
  Rng order_rng(seed ^ 0x5c0e0001ULL);
  Rng dropout_rng(seed ^ 0x5c0e0002ULL);
  Adam adam(AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});
  auto params = scorer.params().all();

  ScorerTrainResult result;
  result.best_valid_accuracy = -1.0;
  std::vector<Matrix> best;
  size_t since_best = 0;
  std::vector<size_t> order(train_set.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    order_rng.shuffle(order.begin(), order.end());
    double loss_sum = 0.0;
    size_t correct = 0;
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<const ScorerExample*> batch;
      for (size_t i = start; i < end; ++i) batch.push_back(&train_set[order[i]]);
      Tape tape;
      tape.set_training(true);
      scorer.params().zero_grad();
      std::vector<Var> losses;
      for (const auto& group : group_by_doc(batch)) {
        auto enc = scorer.encode_document(tape, group.front()->doc, &dropout_rng);
        for (const auto* ex : group) {
          Var z = scorer.logit(tape, enc, ex->candidate, &dropout_rng);
          correct += ((z.scalar() >= 0) == (ex->label == 1)) ? 1 : 0;
          losses.push_back(bce(z, ex->label));
        }
      }
      Var total = scale(sum(concat_cols(losses)), 1.0 / static_cast<double>(batch.size()));
      tape.backward(total);
      clip_global_norm(params, cfg.max_grad_norm);
      adam.step(params);
      loss_sum += total.scalar() * static_cast<double>(batch.size());
    }
    ScorerLogEntry entry;
    entry.epoch = epoch;
    entry.train_loss = loss_sum / static_cast<double>(train_set.size());
    entry.train_accuracy = static_cast<double>(correct) / static_cast<double>(train_set.size());
    entry.valid_accuracy = scorer_accuracy(scorer, eval_set);
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
    if (entry.valid_accuracy > result.best_valid_accuracy) {
      result.best_valid_accuracy = entry.valid_accuracy;
      best.clear();
      for (const Parameter* p : params) best.push_back(p->value);
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  for (size_t i = 0; i < params.size() && !best.empty(); ++i) params[i]->value = best[i];
  return result;
}

}  // namespace kpgen
