#include "kpgen/corpus.h"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "kpgen/porter.h"

namespace kpgen {

using json = nlohmann::json;

namespace {

constexpr const char* kReserved[] = {"<pad>", "<unk>", "<bos>", "<eos>", ";"};

std::string required_string(const json& obj, const char* key, size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw DatasetError(line, std::string("missing key \"") + key + "\"");
  if (!it->is_string()) throw DatasetError(line, std::string("key \"") + key + "\" is not a string");
  return it->get<std::string>();
}

}  // namespace

std::vector<Document> parse_dataset(std::istream& in) {
  std::vector<Document> docs;
  std::unordered_set<std::string> ids;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DatasetError(line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) throw DatasetError(line_no, "expected a JSON object");
    Document doc;
    doc.id = required_string(obj, "id", line_no);
    doc.title = required_string(obj, "title", line_no);
    doc.abstract = required_string(obj, "abstract", line_no);
    auto kp = obj.find("keyphrases");
    if (kp == obj.end()) throw DatasetError(line_no, "missing key \"keyphrases\"");
    if (!kp->is_array()) throw DatasetError(line_no, "key \"keyphrases\" is not an array");
    for (const auto& p : *kp) {
      if (!p.is_string()) throw DatasetError(line_no, "keyphrase is not a string");
      doc.keyphrases.push_back(p.get<std::string>());
    }
    if (!ids.insert(doc.id).second) throw DatasetError(line_no, "duplicate id \"" + doc.id + "\"");
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<Document> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);
  return parse_dataset(in);
}

void write_dataset(std::ostream& out, const std::vector<Document>& docs) {
  for (const auto& d : docs) {
    json obj = {{"id", d.id}, {"title", d.title}, {"abstract", d.abstract}, {"keyphrases", d.keyphrases}};
    out << obj.dump() << '\n';
  }
}

TokenizedDoc tokenize_document(const Document& doc) {
  TokenizedDoc out;
  out.doc_id = doc.id;
  out.tokens = tokenize(doc.title);
  for (auto& t : tokenize(doc.abstract)) out.tokens.push_back(std::move(t));
  const Tokens stemmed = stem_tokens(out.tokens);
  for (const auto& kp : doc.keyphrases) {
    Tokens phrase = tokenize(kp);
    if (phrase.empty()) continue;
    out.present_mask.push_back(is_present(stemmed, phrase));
    out.gold_phrases.push_back(std::move(phrase));
  }
  return out;
}

std::vector<TokenizedDoc> tokenize_documents(const std::vector<Document>& docs) {
  std::vector<TokenizedDoc> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(tokenize_document(d));
  return out;
}

Vocabulary::Vocabulary() {
  for (const char* r : kReserved) {
    index_.emplace(r, static_cast<int>(tokens_.size()));
    tokens_.emplace_back(r);
  }
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  Vocabulary v;
  for (auto& t : tokens) {
    if (v.index_.count(t)) continue;
    v.index_.emplace(t, static_cast<int>(v.tokens_.size()));
    v.tokens_.push_back(std::move(t));
  }
  return v;
}

Vocabulary Vocabulary::build(const std::vector<TokenizedDoc>& docs, size_t max_size) {
  if (max_size < 1) throw std::invalid_argument("vocabulary max_size must be >= 1");
  if (docs.empty()) throw std::invalid_argument("cannot build a vocabulary from an empty corpus");
  std::unordered_map<std::string, size_t> counts;
  for (const auto& d : docs) {
    for (const auto& t : d.tokens) ++counts[t];
    for (const auto& p : d.gold_phrases)
      for (const auto& t : p) ++counts[t];
  }
  Vocabulary reserved;
  std::vector<std::pair<std::string, size_t>> ranked;
  ranked.reserve(counts.size());
  for (auto& [tok, c] : counts)
    if (!reserved.contains(tok)) ranked.emplace_back(tok, c);
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (ranked.size() > max_size) ranked.resize(max_size);
  std::vector<std::string> content;
  content.reserve(ranked.size());
  for (auto& [tok, c] : ranked) content.push_back(tok);
  return from_tokens(std::move(content));
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vocabulary: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  if (lines.size() < static_cast<size_t>(kNumReserved))
    throw std::runtime_error("vocabulary file too short: " + path);
  for (int i = 0; i < kNumReserved; ++i)
    if (lines[static_cast<size_t>(i)] != kReserved[i])
      throw std::runtime_error("vocabulary file does not start with the reserved tokens: " + path);
  Vocabulary v;
  for (size_t i = kNumReserved; i < lines.size(); ++i) {
    if (!v.index_.emplace(lines[i], static_cast<int>(v.tokens_.size())).second)
      throw std::runtime_error("duplicate vocabulary token \"" + lines[i] + "\" in " + path);
    v.tokens_.push_back(lines[i]);
  }
  return v;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write vocabulary: " + path);
  for (const auto& t : tokens_) out << t << '\n';
}

int Vocabulary::index_of(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

uint64_t Vocabulary::fingerprint() const {
  uint64_t h = fnv1a("vocab");
  for (const auto& t : tokens_) h = fnv1a(t + "\n", h);
  return h;
}

std::vector<int> gold_importance(const Tokens& tokens, const std::vector<Tokens>& gold_phrases, bool stemmed) {
  std::unordered_set<std::string> gold_words;
  for (const auto& p : gold_phrases)
    for (const auto& t : p) gold_words.insert(stemmed ? porter_stem(t) : t);
  std::vector<int> beta(tokens.size(), 0);
  for (size_t i = 0; i < tokens.size(); ++i)
    beta[i] = gold_words.count(stemmed ? porter_stem(tokens[i]) : tokens[i]) ? 1 : 0;
  return beta;
}

int SourceMap::target_id(const std::string& token, const Vocabulary& vocab) const {
  if (vocab.contains(token)) return vocab.index_of(token);
  auto it = std::find(oov_tokens.begin(), oov_tokens.end(), token);
  if (it == oov_tokens.end()) return -1;
  return static_cast<int>(vocab.size()) + static_cast<int>(it - oov_tokens.begin());
}

SourceMap map_source(const Tokens& tokens, const Vocabulary& vocab) {
  SourceMap m;
  m.ids.reserve(tokens.size());
  m.ext_ids.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (vocab.contains(t)) {
      int id = vocab.index_of(t);
      m.ids.push_back(id);
      m.ext_ids.push_back(id);
      continue;
    }
    m.ids.push_back(Vocabulary::kUnk);
    auto it = std::find(m.oov_tokens.begin(), m.oov_tokens.end(), t);
    size_t k = static_cast<size_t>(it - m.oov_tokens.begin());
    if (it == m.oov_tokens.end()) m.oov_tokens.push_back(t);
    m.ext_ids.push_back(static_cast<int>(vocab.size() + k));
  }
  return m;
}

std::vector<TrainingTuple> split_tuples(const TokenizedDoc& doc, const Tokens& retrieved,
                                        const Vocabulary& vocab, size_t max_source_len, bool stemmed_labels) {
  Tokens source = doc.tokens;
  if (source.size() > max_source_len) source.resize(max_source_len);
  const SourceMap x = map_source(source, vocab);
  const std::vector<int> beta_star = gold_importance(source, doc.gold_phrases, stemmed_labels);
  std::vector<int> r;
  r.reserve(retrieved.size());
  for (const auto& t : retrieved) r.push_back(vocab.index_of(t));

  std::vector<TrainingTuple> tuples;
  tuples.reserve(doc.gold_phrases.size());
  for (const auto& phrase : doc.gold_phrases) {
    TrainingTuple tt;
    tt.doc_id = doc.doc_id;
    tt.source = source;
    tt.x = x;
    tt.r = r;
    tt.beta_star = beta_star;
    for (const auto& t : phrase) {
      tt.y.push_back(vocab.index_of(t));
      tt.y_target.push_back(x.target_id(t, vocab));
    }
    tt.y.push_back(Vocabulary::kEos);
    tt.y_target.push_back(Vocabulary::kEos);
    tuples.push_back(std::move(tt));
  }
  return tuples;
}

std::vector<Document> dedup_corpus(const std::vector<Document>& docs, const StopWords& stopwords,
                                   double threshold) {
  std::vector<Document> kept;
  std::vector<std::vector<std::string>> kept_sets;
  std::unordered_set<std::string> seen_text;
  for (const auto& d : docs) {
    if (!seen_text.insert(d.title + '\n' + d.abstract).second) continue;
    Tokens toks = tokenize(d.title);
    for (auto& t : tokenize(d.abstract)) toks.push_back(std::move(t));
    auto set = content_set(toks, stopwords);
    bool dup = false;
    for (const auto& other : kept_sets) {
      // Jaccard <= min/max of the sizes, so a large size gap cannot reach the threshold.
      double lo = static_cast<double>(std::min(set.size(), other.size()));
      double hi = static_cast<double>(std::max(set.size(), other.size()));
      if (hi > 0 && lo / hi < threshold) continue;
      if (jaccard(set, other) >= threshold) {
        dup = true;
        break;
      }
    }
    if (dup) continue;
    kept.push_back(d);
    kept_sets.push_back(std::move(set));
  }
  return kept;
}

uint64_t fnv1a(std::string_view data, uint64_t seed) {
  uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace kpgen
