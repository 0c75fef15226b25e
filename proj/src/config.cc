#include "kpgen/config.h"

#include <charconv>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "kpgen/corpus.h"
#include "kpgen/evalkit.h"
#include "kpgen/io.h"

namespace kpgen {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

size_t to_size(const std::string& key, const std::string& v) {
  size_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw std::invalid_argument("config: " + key + " expects a non-negative integer, got '" + v + "'");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw std::invalid_argument("config: " + key + " expects a number, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config: " + key + " expects true or false, got '" + v + "'");
}

std::string fmt(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}
std::string fmt(size_t v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

struct Key {
  std::string name;
  unsigned sections;
  std::function<void(PipelineConfig&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

template <typename T>
Key field(std::string name, unsigned sections, T PipelineConfig::*member) {
  Key k;
  k.name = name;
  k.sections = sections;
  k.get = [member](const PipelineConfig& c) {
    if constexpr (std::is_same_v<T, std::string>) return c.*member;
    else return fmt(c.*member);
  };
  k.set = [member, name](PipelineConfig& c, const std::string& v) {
    if constexpr (std::is_same_v<T, std::string>) c.*member = v;
    else if constexpr (std::is_same_v<T, bool>) c.*member = to_bool(name, v);
    else if constexpr (std::is_same_v<T, double>) c.*member = to_double(name, v);
    else c.*member = static_cast<T>(to_size(name, v));
  };
  return k;
}

template <typename Sub, typename T>
Key sub_field(std::string name, unsigned sections, Sub PipelineConfig::*outer, T Sub::*member) {
  Key k;
  k.name = name;
  k.sections = sections;
  k.get = [outer, member](const PipelineConfig& c) { return fmt(c.*outer.*member); };
  k.set = [outer, member, name](PipelineConfig& c, const std::string& v) {
    if constexpr (std::is_same_v<T, bool>) c.*outer.*member = to_bool(name, v);
    else if constexpr (std::is_same_v<T, double>) c.*outer.*member = to_double(name, v);
    else c.*outer.*member = static_cast<T>(to_size(name, v));
  };
  return k;
}

const std::vector<Key>& table() {
  constexpr unsigned P = kSectionPreprocess, M = kSectionModel, S = kSectionScorer, N = 0;
  using C = PipelineConfig;
  static const std::vector<Key> keys = {
      field("data.train", N, &C::train_path),
      field("data.valid", N, &C::valid_path),
      field("data.test", N, &C::test_path),
      field("data.stopwords", N, &C::stopwords_path),
      field("work_dir", N, &C::work_dir),
      field("mode", M, &C::mode),
      field("profile", N, &C::profile),
      field("seed", M | S, &C::seed),
      field("threads", N, &C::threads),
      field("retrieval.k", M | S, &C::retrieval_k),
      field("dedup.threshold", P, &C::dedup_threshold),
      field("vocab.max_size", P, &C::vocab_max_size),
      field("labels.stemmed", M, &C::stemmed_labels),
      field("extract.threshold", N, &C::extract_threshold),
      field("extract.filter_punctuation", N, &C::extract_filter_punctuation),
      field("eval.min_denominator", N, &C::eval_min_denominator),
      sub_field("model.embedding_dim", M, &C::model, &ModelConfig::embedding_dim),
      sub_field("model.hidden_dim", M, &C::model, &ModelConfig::hidden_dim),
      sub_field("model.pos_loss_weight", M, &C::model, &ModelConfig::pos_loss_weight),
      sub_field("model.dropout", M, &C::model, &ModelConfig::dropout),
      sub_field("model.batch_size", M, &C::model, &ModelConfig::batch_size),
      sub_field("model.lr", M, &C::model, &ModelConfig::lr),
      sub_field("model.max_grad_norm", M, &C::model, &ModelConfig::max_grad_norm),
      sub_field("model.init_range", M, &C::model, &ModelConfig::init_range),
      sub_field("model.beam_depth", N, &C::model, &ModelConfig::beam_depth),
      sub_field("model.beam_size", N, &C::model, &ModelConfig::beam_size),
      sub_field("model.length_normalize", N, &C::model, &ModelConfig::length_normalize),
      sub_field("model.max_source_len", M | S, &C::model, &ModelConfig::max_source_len),
      sub_field("model.max_epochs", M, &C::model, &ModelConfig::max_epochs),
      sub_field("model.patience", M, &C::model, &ModelConfig::patience),
      sub_field("model.eval_every", M, &C::model, &ModelConfig::eval_every),
      sub_field("scorer.embedding_dim", S, &C::scorer, &ScorerConfig::embedding_dim),
      sub_field("scorer.hidden_dim", S, &C::scorer, &ScorerConfig::hidden_dim),
      sub_field("scorer.attend_dim", S, &C::scorer, &ScorerConfig::attend_dim),
      sub_field("scorer.aggregate_dim", S, &C::scorer, &ScorerConfig::aggregate_dim),
      sub_field("scorer.dropout", S, &C::scorer, &ScorerConfig::dropout),
      sub_field("scorer.lr", S, &C::scorer, &ScorerConfig::lr),
      sub_field("scorer.batch_size", S, &C::scorer, &ScorerConfig::batch_size),
      sub_field("scorer.max_grad_norm", S, &C::scorer, &ScorerConfig::max_grad_norm),
      sub_field("scorer.init_range", S, &C::scorer, &ScorerConfig::init_range),
      sub_field("scorer.max_epochs", S, &C::scorer, &ScorerConfig::max_epochs),
      sub_field("scorer.patience", S, &C::scorer, &ScorerConfig::patience),
      sub_field("scorer.negative_ratio", S, &C::scorer, &ScorerConfig::negative_ratio),
      sub_field("scorer.span_fraction", S, &C::scorer, &ScorerConfig::span_fraction),
  };
  return keys;
}

const Key& find_key(const std::string& name) {
  for (const auto& k : table())
    if (k.name == name) return k;
  throw std::invalid_argument("config: unknown key '" + name + "'");
}

}  // namespace

Mode PipelineConfig::model_mode() const {
  if (mode == "KG-KE-KR-M") return Mode::KgKeKr;
  return parse_mode(mode);
}

void PipelineConfig::validate() const {
  if (mode != "KG-KE-KR-M") parse_mode(mode);
  parse_profile(profile);
  if (threads < 1) throw std::invalid_argument("config: threads must be >= 1");
  if (retrieval_k < 1) throw std::invalid_argument("config: retrieval.k must be >= 1");
  if (vocab_max_size < 1) throw std::invalid_argument("config: vocab.max_size must be >= 1");
  if (dedup_threshold <= 0 || dedup_threshold > 1) throw std::invalid_argument("config: dedup.threshold must be in (0, 1]");
  if (extract_threshold < 0 || extract_threshold > 1)
    throw std::invalid_argument("config: extract.threshold must be in [0, 1]");
  if (work_dir.empty()) throw std::invalid_argument("config: work_dir must not be empty");
  ModelConfig m = model;
  m.mode = model_mode();
  m.validate();
  scorer.validate();
}

void PipelineConfig::set(const std::string& key, const std::string& value) {
  find_key(key).set(*this, value);
  // The model section mirrors the top-level mode and sequence limit.
  if (key == "mode" && (mode == "KG-KE-KR-M" || mode == "KG-KE" || mode == "KG-KR" || mode == "KG-KE-KR"))
    model.mode = model_mode();
  if (key == "model.max_source_len") scorer.max_source_len = model.max_source_len;
  if (key == "vocab.max_size") model.vocab_size = vocab_max_size;
}

std::string PipelineConfig::get(const std::string& key) const { return find_key(key).get(*this); }

std::vector<std::string> PipelineConfig::keys() {
  std::vector<std::string> out;
  for (const auto& k : table()) out.push_back(k.name);
  return out;
}

std::string PipelineConfig::effective() const {
  std::ostringstream out;
  for (const auto& k : table()) out << k.name << " = " << k.get(*this) << "\n";
  return out.str();
}

uint64_t PipelineConfig::hash(unsigned sections) const {
  uint64_t h = fnv1a("kpgen-config");
  for (const auto& k : table()) {
    if ((k.sections & sections) == 0) continue;
    std::string v = k.name == "mode" ? to_string(model_mode()) : k.get(*this);
    h = fnv1a(k.name + "=" + v + "\n", h);
  }
  return h;
}

PipelineConfig parse_config(const std::string& text, PipelineConfig base) {
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line.resize(hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    try {
      base.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return base;
}

PipelineConfig load_config(const std::string& path, PipelineConfig base) {
  return parse_config(read_file(path), std::move(base));
}

PipelineConfig toy_config() {
  PipelineConfig c;
  c.model.embedding_dim = 32;
  c.model.hidden_dim = 64;
  c.model.batch_size = 16;
  c.model.lr = 0.005;
  c.model.dropout = 0.0;
  c.model.beam_size = 50;
  c.model.max_epochs = 300;
  c.model.patience = 8;
  c.scorer.embedding_dim = 32;
  c.scorer.hidden_dim = 32;
  c.scorer.attend_dim = 32;
  c.scorer.aggregate_dim = 32;
  c.scorer.batch_size = 16;
  c.scorer.lr = 0.005;
  c.scorer.dropout = 0.0;
  c.scorer.max_epochs = 40;
  c.scorer.patience = 6;
  return c;
}

}  // namespace kpgen
