#include "kpgen/pipeline.h"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "kpgen/evalkit.h"
#include "kpgen/io.h"
#include "kpgen/porter.h"
#include "kpgen/toy.h"

namespace kpgen {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kManifestFormat = "kpgen-preprocess";

// KPGEN_LOG=quiet silences progress lines; errors are always written.
class Logger {
 public:
  explicit Logger(std::ostream& out) : out_(out) {
    const char* level = std::getenv("KPGEN_LOG");
    quiet_ = level != nullptr && std::string(level) == "quiet";
    debug_ = level != nullptr && std::string(level) == "debug";
  }
  void info(const std::string& msg) {
    if (!quiet_) out_ << msg << "\n";
  }
  void debug(const std::string& msg) {
    if (debug_) out_ << msg << "\n";
  }
  void error(const std::string& msg) { out_ << "error: " << msg << "\n"; }

 private:
  std::ostream& out_;
  bool quiet_ = false;
  bool debug_ = false;
};

class StageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void require(const std::string& path, const std::string& what) {
  if (!fs::exists(path)) throw StageError("missing " + what + ": " + path);
}

void check_hash(const json& meta, uint64_t expected, const std::string& what, bool force, Logger& log) {
  const std::string have = meta.value("config_hash", "");
  if (have == hex64(expected)) return;
  const std::string msg = what + " was built with config " + (have.empty() ? "<none>" : have) + ", current is " +
                          hex64(expected);
  if (!force) throw StageError(msg + " (rerun the producing stage or pass --force)");
  log.info("warning: " + msg + "; continuing because of --force");
}

StopWords load_stopwords(const PipelineConfig& cfg) {
  return cfg.stopwords_path.empty() ? StopWords::english() : StopWords::load(cfg.stopwords_path);
}

std::string jsonl_text(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

struct Prepared {
  Vocabulary vocab;
  RetrievalIndex index;
  std::vector<TokenizedDoc> train;
};

json read_manifest(const Artifacts& art, const PipelineConfig& cfg, bool force, Logger& log) {
  require(art.manifest(), "preprocess manifest (run preprocess)");
  json manifest = json::parse(read_file(art.manifest()));
  if (manifest.value("format", "") != kManifestFormat) throw StageError(art.manifest() + " is not a preprocess manifest");
  check_hash(manifest, cfg.hash(kSectionPreprocess), "preprocess output", force, log);
  return manifest;
}

Prepared load_prepared(const Artifacts& art, const PipelineConfig& cfg, bool force, Logger& log) {
  json manifest = read_manifest(art, cfg, force, log);
  require(art.vocab(), "vocabulary (run preprocess)");
  require(art.train(), "preprocessed training set (run preprocess)");
  require(art.index(), "retrieval index (run build-index)");
  Prepared p;
  p.vocab = Vocabulary::load(art.vocab());
  if (manifest.value("vocab_fingerprint", "") != hex64(p.vocab.fingerprint()))
    throw StageError(art.vocab() + " does not match the preprocess manifest");
  json meta;
  p.index = RetrievalIndex::load(art.index(), &meta);
  check_hash(meta, cfg.hash(kSectionPreprocess), "retrieval index", force, log);
  p.train = tokenize_documents(load_dataset(art.train()));
  return p;
}

ModelConfig model_config(const PipelineConfig& cfg) {
  ModelConfig m = cfg.model;
  m.mode = cfg.model_mode();
  m.vocab_size = cfg.vocab_max_size;
  return m;
}

std::vector<TrainingTuple> make_tuples(const std::vector<TokenizedDoc>& docs, const Prepared& p,
                                       const PipelineConfig& cfg) {
  std::vector<TrainingTuple> out;
  for (const auto& d : docs) {
    if (d.gold_phrases.empty()) continue;
    Tokens r = concat_retrieved(p.index.retrieve(d, cfg.retrieval_k));
    auto tuples = split_tuples(d, r, p.vocab, cfg.model.max_source_len, cfg.stemmed_labels);
    for (auto& t : tuples) out.push_back(std::move(t));
  }
  return out;
}

std::vector<ScorerExample> make_examples(const std::vector<TokenizedDoc>& docs, const Prepared& p,
                                         const PipelineConfig& cfg, Rng& rng) {
  std::vector<ScorerExample> out;
  for (const auto& d : docs) {
    std::vector<Tokens> rk;
    for (const auto& c : collect_retrieved_candidates(p.index.retrieve(d, cfg.retrieval_k))) rk.push_back(c.tokens);
    for (auto& ex : make_scorer_examples(d, rk, p.vocab, cfg.scorer, rng)) out.push_back(std::move(ex));
  }
  return out;
}

// Stages ----------------------------------------------------------------------

void stage_preprocess(const PipelineConfig& cfg, const Artifacts& art, Logger& log) {
  const StopWords stop = load_stopwords(cfg);
  auto train = load_dataset(cfg.train_path);
  std::vector<Document> held_out;
  for (const auto* path : {&cfg.valid_path, &cfg.test_path}) {
    if (path->empty() || !fs::exists(*path)) continue;
    for (auto& d : load_dataset(*path)) held_out.push_back(std::move(d));
  }
  // Held-out documents come first so training near-duplicates of them are the ones dropped.
  std::vector<Document> combined;
  for (auto d : held_out) {
    d.id = "\x01held-out:" + d.id;
    combined.push_back(std::move(d));
  }
  combined.insert(combined.end(), train.begin(), train.end());
  auto survivors = dedup_corpus(combined, stop, cfg.dedup_threshold);
  std::vector<Document> kept;
  for (auto& d : survivors)
    if (d.id.rfind("\x01held-out:", 0) != 0) kept.push_back(std::move(d));
  if (kept.empty()) throw StageError("preprocess: no training documents left after deduplication");

  auto tokenized = tokenize_documents(kept);
  Vocabulary vocab = Vocabulary::build(tokenized, cfg.vocab_max_size);

  std::ostringstream train_out;
  write_dataset(train_out, kept);
  atomic_write(art.train(), train_out.str());
  vocab.save(art.vocab());
  stop.save(art.stopwords());
  json manifest{{"format", kManifestFormat},
                {"config_hash", hex64(cfg.hash(kSectionPreprocess))},
                {"train_documents", kept.size()},
                {"dropped_duplicates", train.size() - kept.size()},
                {"vocab_size", vocab.size()},
                {"vocab_fingerprint", hex64(vocab.fingerprint())}};
  atomic_write(art.manifest(), manifest.dump(2) + "\n");
  log.info("preprocess: kept " + std::to_string(kept.size()) + " of " + std::to_string(train.size()) +
           " training documents; vocabulary " + std::to_string(vocab.size()));
}

void stage_build_index(const PipelineConfig& cfg, const Artifacts& art, const RunOptions& opts, Logger& log) {
  read_manifest(art, cfg, opts.force, log);
  require(art.train(), "preprocessed training set (run preprocess)");
  require(art.stopwords(), "stop-word list (run preprocess)");
  auto docs = tokenize_documents(load_dataset(art.train()));
  auto index = RetrievalIndex::build(docs, StopWords::load(art.stopwords()));
  index.save(art.index(), json{{"config_hash", hex64(cfg.hash(kSectionPreprocess))}});
  log.info("build-index: " + std::to_string(index.size()) + " documents, " + std::to_string(index.postings().size()) +
           " terms");
}

void stage_train(const PipelineConfig& cfg, const Artifacts& art, const RunOptions& opts, Logger& log) {
  Prepared p = load_prepared(art, cfg, opts.force, log);
  auto train_tuples = make_tuples(p.train, p, cfg);
  std::vector<TrainingTuple> valid_tuples;
  if (!cfg.valid_path.empty() && fs::exists(cfg.valid_path))
    valid_tuples = make_tuples(tokenize_documents(load_dataset(cfg.valid_path)), p, cfg);
  if (valid_tuples.empty()) {
    log.info("train: no validation set, using the training tuples for early stopping");
    valid_tuples = train_tuples;
  }
  const ModelConfig mc = model_config(cfg);
  KgModel model(mc, p.vocab.size());
  model.init(cfg.seed);
  std::vector<std::string> lines;
  log.info("train: " + to_string(mc.mode) + ", " + std::to_string(train_tuples.size()) + " tuples, " +
           std::to_string(model.params().count()) + " parameter tensors");
  auto result = train(model, train_tuples, valid_tuples, cfg.seed, [&](const TrainLogEntry& e) {
    lines.push_back(e.to_json().dump());
    log.debug("  epoch " + std::to_string(e.epoch) + " loss " + std::to_string(e.train_loss) + " ppl " +
              std::to_string(e.valid_ppl));
  });
  atomic_write(art.train_log(mc.mode), jsonl_text(lines));
  const double final_loss = mean_tuple_loss(model, train_tuples);
  model.save(art.model(mc.mode), json{{"config_hash", hex64(cfg.hash(kSectionPreprocess | kSectionModel))},
                                      {"vocab_fingerprint", hex64(p.vocab.fingerprint())},
                                      {"index_fingerprint", hex64(p.index.fingerprint())},
                                      {"epochs", result.epochs_run},
                                      {"initial_loss", result.initial_loss},
                                      {"final_loss", final_loss},
                                      {"best_valid_ppl", result.best_valid_ppl}});
  log.info("train: " + std::to_string(result.epochs_run) + " epochs, initial loss " +
           std::to_string(result.initial_loss) + ", final loss " + std::to_string(final_loss) +
           ", best validation perplexity " + std::to_string(result.best_valid_ppl));
}

void stage_train_scorer(const PipelineConfig& cfg, const Artifacts& art, const RunOptions& opts, Logger& log) {
  Prepared p = load_prepared(art, cfg, opts.force, log);
  Rng rng(cfg.seed ^ 0x6e656761ULL);
  auto train_set = make_examples(p.train, p, cfg, rng);
  std::vector<ScorerExample> valid_set;
  if (!cfg.valid_path.empty() && fs::exists(cfg.valid_path))
    valid_set = make_examples(tokenize_documents(load_dataset(cfg.valid_path)), p, cfg, rng);
  Scorer scorer(cfg.scorer, p.vocab.size());
  scorer.init(cfg.seed + 1);
  std::vector<std::string> lines;
  auto result = train_scorer(scorer, train_set, valid_set, cfg.seed,
                             [&](const ScorerLogEntry& e) { lines.push_back(e.to_json().dump()); });
  atomic_write(art.scorer_log(), jsonl_text(lines));
  scorer.save(art.scorer(), json{{"config_hash", hex64(cfg.hash(kSectionPreprocess | kSectionScorer))},
                                 {"vocab_fingerprint", hex64(p.vocab.fingerprint())},
                                 {"best_valid_accuracy", result.best_valid_accuracy}});
  log.info("train-scorer: " + std::to_string(train_set.size()) + " examples, best validation accuracy " +
           std::to_string(result.best_valid_accuracy));
}

std::string split_path(const PipelineConfig& cfg, const Artifacts& art, const RunOptions& opts) {
  if (!opts.input.empty()) return opts.input;
  if (opts.split == "train") return art.train();
  if (opts.split == "valid") return cfg.valid_path;
  if (opts.split == "test") return cfg.test_path;
  throw StageError("unknown split '" + opts.split + "' (expected train, valid or test)");
}

void stage_predict(const PipelineConfig& cfg, const Artifacts& art, const RunOptions& opts, Logger& log) {
  Prepared p = load_prepared(art, cfg, opts.force, log);
  const Mode mm = cfg.model_mode();
  require(art.model(mm), "model checkpoint (run train with mode " + to_string(mm) + ")");
  json meta;
  KgModel model = KgModel::load(art.model(mm), &meta);
  check_hash(meta, cfg.hash(kSectionPreprocess | kSectionModel), "model checkpoint", opts.force, log);
  if (meta.value("vocab_fingerprint", "") != hex64(p.vocab.fingerprint()))
    throw StageError(art.model(mm) + " was trained with a different vocabulary");

  std::optional<Scorer> scorer;
  if (cfg.merging()) {
    require(art.scorer(), "scorer checkpoint (run train-scorer)");
    json smeta;
    scorer.emplace(Scorer::load(art.scorer(), &smeta));
    check_hash(smeta, cfg.hash(kSectionPreprocess | kSectionScorer), "scorer checkpoint", opts.force, log);
  }
  // Decoding settings are read from the current config, not the checkpoint.
  ModelConfig decode_cfg = model.config();
  decode_cfg.beam_depth = cfg.model.beam_depth;
  decode_cfg.beam_size = cfg.model.beam_size;
  decode_cfg.length_normalize = cfg.model.length_normalize;
  KgModel decoder(decode_cfg, model.vocab_tokens());
  for (size_t i = 0; i < model.params().count(); ++i) decoder.params().all()[i]->value = model.params().all()[i]->value;

  const std::string input = split_path(cfg, art, opts);
  require(input, "input documents");
  auto docs = tokenize_documents(load_dataset(input));

  Predictor predictor;
  predictor.config = &cfg;
  predictor.vocab = &p.vocab;
  predictor.index = &p.index;
  predictor.model = &decoder;
  predictor.scorer = scorer ? &*scorer : nullptr;

  std::vector<std::string> pred_lines(docs.size()), cand_lines(docs.size());
  parallel_for(docs.size(), cfg.threads, [&](size_t i) {
    auto out = predictor.run(docs[i]);
    pred_lines[i] = prediction_to_json(docs[i].doc_id, out.merged.ranked).dump();
    cand_lines[i] = candidates_to_json(docs[i].doc_id, out.candidates).dump();
  });
  const std::string split_name = opts.input.empty() ? opts.split : fs::path(opts.input).stem().string();
  const std::string pred_path = opts.output.empty() ? art.predictions(cfg.mode, split_name) : opts.output;
  atomic_write(pred_path, jsonl_text(pred_lines));
  atomic_write(art.candidates(cfg.mode, split_name), jsonl_text(cand_lines));
  log.info("predict: " + std::to_string(docs.size()) + " documents -> " + pred_path);
}

void stage_evaluate(const PipelineConfig& cfg, const Artifacts& art, const RunOptions& opts, Logger& log) {
  const std::string pred_path = opts.pred_path.empty() ? art.predictions(cfg.mode, opts.split) : opts.pred_path;
  const std::string gold_path = opts.gold_path.empty() ? split_path(cfg, art, opts) : opts.gold_path;
  require(pred_path, "predictions (run predict)");
  require(gold_path, "gold documents");
  std::map<std::string, TokenizedDoc> gold;
  for (auto& d : tokenize_documents(load_dataset(gold_path))) gold.emplace(d.doc_id, std::move(d));

  std::vector<EvalDocument> docs;
  std::istringstream in(read_file(pred_path));
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw StageError(pred_path + " line " + std::to_string(lineno) + ": " + e.what());
    }
    const std::string id = j.at("id").get<std::string>();
    auto it = gold.find(id);
    if (it == gold.end()) throw StageError(pred_path + " line " + std::to_string(lineno) + ": no gold document '" + id + "'");
    EvalDocument ed;
    ed.id = id;
    for (const auto& p : j.at("predictions")) ed.preds.push_back(tokenize(p.at("phrase").get<std::string>()));
    ed.gold = it->second.gold_phrases;
    ed.source = it->second.tokens;
    docs.push_back(std::move(ed));
  }
  MetricOptions mopts;
  mopts.min_denominator = cfg.eval_min_denominator;
  json report = evaluate_documents(docs, parse_profile(cfg.profile), mopts);
  report["predictions"] = fs::path(pred_path).filename().string();
  const std::string out = opts.output.empty() ? art.report(cfg.mode, opts.split) : opts.output;
  atomic_write(out, report.dump(2) + "\n");
  log.info("evaluate: F1@5 " + std::to_string(report["total"]["f1@5"].get<double>()) + ", F1@10 " +
           std::to_string(report["total"]["f1@10"].get<double>()) + " -> " + out);
}

void stage_make_toy(const PipelineConfig& cfg, const RunOptions& opts, Logger& log) {
  const std::string dir = opts.output.empty() ? "data/toy" : opts.output;
  write_toy_corpus(dir, generate_toy_corpus(20190601 + cfg.seed - 1));
  log.info("make-toy: wrote " + dir);
}

}  // namespace

Predictor::Output Predictor::run(const TokenizedDoc& doc) const {
  const PipelineConfig& cfg = *config;
  Output out;
  Tokens source = doc.tokens;
  if (source.size() > cfg.model.max_source_len) source.resize(cfg.model.max_source_len);
  if (source.empty()) throw std::invalid_argument("document " + doc.doc_id + " has no tokens");
  const RetrievalResult retrieved = index->retrieve(doc, cfg.retrieval_k);
  const Tokens r_tokens = concat_retrieved(retrieved);
  std::vector<int> r;
  for (const auto& t : r_tokens) r.push_back(vocab->index_of(t));
  const SourceMap x = map_source(source, *vocab);
  auto generated = model->generate(x.ids, x, r, *vocab);

  std::vector<ScoredPhrase> extracted;
  if (!generated.beta.empty()) {
    ExtractOptions eo;
    eo.threshold = cfg.extract_threshold;
    eo.filter_punctuation = cfg.extract_filter_punctuation;
    extracted = collect_extracted(source, generated.beta, eo);
  }
  out.candidates = assemble(collect_retrieved_candidates(retrieved), extracted, generated.phrases, source);

  if (!cfg.merging()) {
    out.merged = passthrough_generated(out.candidates);
    return out;
  }
  if (scorer == nullptr) throw std::logic_error("predict: merging requires a scorer");
  if (out.candidates.empty()) return out;
  // Score each distinct stemmed candidate once, with one document encoding.
  std::map<std::string, size_t> slot;
  std::vector<std::vector<int>> cand_ids;
  for (const auto* list : {&out.candidates.generated, &out.candidates.retrieved, &out.candidates.extracted}) {
    for (const auto& c : *list) {
      if (slot.emplace(stem_phrase(c.tokens), cand_ids.size()).second) cand_ids.push_back(to_ids(c.tokens, *vocab));
    }
  }
  const auto probs = scorer->score_all(to_ids(source, *vocab), cand_ids);
  out.merged = merge(out.candidates, [&](const Tokens& t) { return probs[slot.at(stem_phrase(t))]; });
  return out;
}

void parallel_for(size_t n, size_t threads, const std::function<void(size_t)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::mutex mu;
  size_t failed_at = n;
  std::exception_ptr failure;
  auto worker = [&] {
    for (size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (i < failed_at) {
          failed_at = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  const size_t count = std::min(threads, n);
  for (size_t t = 0; t < count; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

int run_subcommand(const std::string& name, const PipelineConfig& config, const RunOptions& options,
                   std::ostream& out) {
  Logger log(out);
  try {
    config.validate();
    if (name == "make-toy") {
      stage_make_toy(config, options, log);
      return 0;
    }
    Artifacts art{config.work_dir};
    fs::create_directories(art.dir);
    atomic_write(art.dir + "/config.effective", config.effective());
    if (name == "preprocess") stage_preprocess(config, art, log);
    else if (name == "build-index") stage_build_index(config, art, options, log);
    else if (name == "train") stage_train(config, art, options, log);
    else if (name == "train-scorer") stage_train_scorer(config, art, options, log);
    else if (name == "predict") stage_predict(config, art, options, log);
    else if (name == "evaluate") stage_evaluate(config, art, options, log);
    else throw StageError("unknown subcommand '" + name + "'");
    return 0;
  } catch (const DatasetError& e) {
    log.error(e.what());
    return 3;
  } catch (const StageError& e) {
    log.error(e.what());
    return 2;
  } catch (const std::exception& e) {
    log.error(e.what());
    return 1;
  }
}

}  // namespace kpgen
