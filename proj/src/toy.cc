#include "kpgen/toy.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "kpgen/autodiff.h"
#include "kpgen/io.h"

namespace kpgen {

namespace {

struct Topic {
  std::vector<std::string> fillers;
  std::vector<std::string> absent;  // keyphrases never written into a text
};

const std::vector<Topic>& topics() {
  static const std::vector<Topic> t = {
      {{"pixels", "textures", "meshes", "shaders", "lighting", "scenes", "polygons", "renderers"},
       {"computer graphics", "visual computing pipelines", "photorealistic image synthesis"}},
      {{"packets", "routers", "bandwidth", "latency", "protocols", "links", "switches", "topologies"},
       {"wireless communication", "network traffic management", "internet architecture"}},
      {{"tables", "queries", "transactions", "schemas", "records", "joins", "views", "replicas"},
       {"data management", "relational database systems", "storage engines"}},
      {{"genes", "proteins", "cells", "sequences", "enzymes", "tissues", "mutations", "genomes"},
       {"computational biology", "molecular structure modeling", "genome analysis"}},
      {{"robots", "sensors", "actuators", "grippers", "motors", "arms", "trajectories", "drones"},
       {"autonomous machines", "robot motion planning", "embodied agents"}},
      {{"markets", "stocks", "prices", "portfolios", "traders", "assets", "bonds", "currencies"},
       {"financial forecasting", "credit risk analysis", "quantitative economics"}},
      {{"phonemes", "utterances", "speakers", "accents", "syllables", "voices", "transcripts", "dialects"},
       {"speech recognition", "spoken language understanding", "acoustic modeling"}},
      {{"attacks", "passwords", "firewalls", "intrusions", "malware", "keys", "exploits", "certificates"},
       {"computer security", "network threat detection", "access control"}},
      {{"students", "courses", "lectures", "exams", "teachers", "grades", "curricula", "quizzes"},
       {"learning analytics", "educational technology", "intelligent online tutoring"}},
      {{"temperatures", "rainfall", "oceans", "glaciers", "emissions", "forests", "droughts", "aerosols"},
       {"climate science", "environmental monitoring networks", "earth systems"}},
  };
  return t;
}

const std::vector<std::string> kModifiers = {
    "adaptive",    "sparse",      "spectral",    "bayesian",   "stochastic",    "hierarchical", "convex",
    "robust",      "distributed", "incremental", "probabilistic", "recursive", "parallel",     "discrete",
    "nonlinear",   "temporal",    "semantic",    "genetic",    "fuzzy",         "dynamic",      "greedy",
    "online",      "randomized",  "approximate", "contrastive", "federated",    "bilinear",     "quantized",
    "differential", "multiscale", "variational", "streaming",  "lossless",      "geometric",    "neural",
    "iterative",   "kernelized",  "asynchronous", "weighted",  "modular"};

const std::vector<std::string> kHeads = {
    "clustering", "regression", "sampling",   "scheduling",   "indexing",    "filtering",    "hashing",
    "routing",    "caching",    "parsing",    "encoding",     "tracking",    "ranking",      "pruning",
    "matching",   "inference",  "estimation", "segmentation", "compression", "optimization", "partitioning",
    "labeling",   "alignment",  "smoothing",  "retrieval",    "embedding",   "decoding",     "prefetching",
    "sketching",  "balancing",  "summarization", "interpolation", "verification", "synthesis", "allocation",
    "calibration", "annotation", "reconstruction", "deduplication", "localization"};

// {0},{1},{2}: present phrases; {f}: a topic filler; {n}: a number.
const std::vector<std::string> kBodies = {
    "this paper presents {0} of {f} and {f} .",
    "we combine {1} with {f} {f} to handle {f} .",
    "experiments on {n} benchmarks of {f} show that {2} improves {f} accuracy .",
    "our method applies {1} over {f} in {n} settings .",
    "results confirm that {2} scales to large {f} collections .",
    "unlike prior work , {0} needs no labelled {f} .",
};

const std::vector<std::string> kExtras = {
    "the proposed approach is simple and efficient .",
    "we also discuss limitations and future work .",
    "a public implementation is provided .",
    "the evaluation covers {n} scenarios .",
};

std::string fill(const std::string& tmpl, const std::vector<std::string>& present, const Topic& topic, Rng& rng) {
  std::ostringstream out;
  for (size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] != '{') {
      out << tmpl[i];
      continue;
    }
    const size_t close = tmpl.find('}', i);
    const std::string key = tmpl.substr(i + 1, close - i - 1);
    if (key == "f")
      out << topic.fillers[rng.below(topic.fillers.size())];
    else if (key == "n")
      out << 2 + rng.below(98);
    else
      out << present.at(static_cast<size_t>(std::stoi(key)));
    i = close;
  }
  return out.str();
}

Document make_document(const std::string& id, size_t topic_index, Rng& rng) {
  const Topic& topic = topics()[topic_index];
  std::vector<std::string> present;
  while (present.size() < 3) {
    std::string p = kModifiers[rng.below(kModifiers.size())] + " " + kHeads[rng.below(kHeads.size())];
    if (std::find(present.begin(), present.end(), p) == present.end()) present.push_back(p);
  }
  std::vector<size_t> absent_pick = {0, 1, 2};
  rng.shuffle(absent_pick.begin(), absent_pick.end());

  Document doc;
  doc.id = id;
  doc.title = fill("{0} for {f} {f}", present, topic, rng);

  // Every present phrase must appear: one sentence naming each, plus a random extra sentence or two.
  std::vector<std::string> sentences;
  std::vector<size_t> order = {0, 1, 2, 3, 4, 5};
  rng.shuffle(order.begin(), order.end());
  bool has[3] = {false, false, false};
  const size_t n_bodies = 3 + rng.below(2);
  for (size_t i = 0; i < order.size(); ++i) {
    const std::string& b = kBodies[order[i]];
    bool needed = false;
    for (int k = 0; k < 3; ++k)
      if (!has[k] && b.find("{" + std::to_string(k) + "}") != std::string::npos) needed = true;
    if (!needed && sentences.size() >= n_bodies) continue;
    for (int k = 0; k < 3; ++k)
      if (b.find("{" + std::to_string(k) + "}") != std::string::npos) has[k] = true;
    sentences.push_back(fill(b, present, topic, rng));
  }
  const size_t n_extra = 1 + rng.below(2);
  for (size_t i = 0; i < n_extra; ++i)
    sentences.insert(sentences.begin() + static_cast<std::ptrdiff_t>(rng.below(sentences.size() + 1)),
                     fill(kExtras[rng.below(kExtras.size())], present, topic, rng));
  std::string abstract;
  for (const auto& s : sentences) abstract += (abstract.empty() ? "" : " ") + s;
  doc.abstract = abstract;

  doc.keyphrases = present;
  doc.keyphrases.push_back(topic.absent[absent_pick[0]]);
  doc.keyphrases.push_back(topic.absent[absent_pick[1]]);
  return doc;
}

std::string jsonl(const std::vector<Document>& docs) {
  std::ostringstream out;
  write_dataset(out, docs);
  return out.str();
}

}  // namespace

ToyCorpus generate_toy_corpus(uint64_t seed) {
  Rng rng(seed);
  ToyCorpus corpus;
  auto make = [&](std::vector<Document>& into, const std::string& prefix, size_t count) {
    for (size_t i = 0; i < count; ++i) {
      char id[32];
      std::snprintf(id, sizeof(id), "%s-%03zu", prefix.c_str(), i);
      into.push_back(make_document(id, i % topics().size(), rng));
    }
  };
  make(corpus.train, "train", 50);
  make(corpus.valid, "valid", 10);
  make(corpus.test, "test", 10);
  return corpus;
}

void write_toy_corpus(const std::string& dir, const ToyCorpus& corpus) {
  std::filesystem::create_directories(dir);
  atomic_write(dir + "/train.jsonl", jsonl(corpus.train));
  atomic_write(dir + "/valid.jsonl", jsonl(corpus.valid));
  atomic_write(dir + "/test.jsonl", jsonl(corpus.test));
}

}  // namespace kpgen
