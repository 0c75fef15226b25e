#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kpgen/candidates.h"
#include "kpgen/config.h"
#include "kpgen/kgmodel.h"
#include "kpgen/merger.h"
#include "kpgen/retriever.h"
#include "kpgen/scorer.h"

namespace kpgen {

struct RunOptions {
  bool force = false;       // accept artifacts built under a different config
  std::string split = "test";  // predict: train, valid or test
  std::string input;        // predict: explicit JSONL instead of a split
  std::string output;       // predict / evaluate / make-toy output path
  std::string pred_path;    // evaluate
  std::string gold_path;    // evaluate
};

// Artifact paths inside the work directory.
struct Artifacts {
  std::string dir;
  std::string manifest() const { return dir + "/preprocess.json"; }
  std::string train() const { return dir + "/train.jsonl"; }
  std::string vocab() const { return dir + "/vocab.txt"; }
  std::string stopwords() const { return dir + "/stopwords.txt"; }
  std::string index() const { return dir + "/index.json"; }
  std::string model(Mode m) const { return dir + "/model." + to_string(m) + ".ckpt"; }
  std::string train_log(Mode m) const { return dir + "/train_log." + to_string(m) + ".jsonl"; }
  std::string scorer() const { return dir + "/scorer.ckpt"; }
  std::string scorer_log() const { return dir + "/scorer_log.jsonl"; }
  std::string predictions(const std::string& mode, const std::string& split) const {
    return dir + "/predictions." + mode + "." + split + ".jsonl";
  }
  std::string candidates(const std::string& mode, const std::string& split) const {
    return dir + "/candidates." + mode + "." + split + ".jsonl";
  }
  std::string report(const std::string& mode, const std::string& split) const {
    return dir + "/report." + mode + "." + split + ".json";
  }
};

// Runs one of preprocess, build-index, train, train-scorer, predict,
// evaluate (and make-toy). Returns 0 on success; on failure writes the
// message to `log` and returns non-zero.
int run_subcommand(const std::string& name, const PipelineConfig& config, const RunOptions& options,
                   std::ostream& log);

// Everything predict needs for one document, shared read-only across workers.
struct Predictor {
  const PipelineConfig* config = nullptr;
  const Vocabulary* vocab = nullptr;
  const RetrievalIndex* index = nullptr;
  const KgModel* model = nullptr;
  const Scorer* scorer = nullptr;  // required when merging

  struct Output {
    CandidateSet candidates;
    MergeResult merged;
  };
  Output run(const TokenizedDoc& doc) const;
};

// Calls fn(i) for i in [0, n) on `threads` workers. Exceptions are rethrown
// for the lowest failing index after all workers stop.
void parallel_for(size_t n, size_t threads, const std::function<void(size_t)>& fn);

}  // namespace kpgen
