#include "kpgen/retriever.h"

#include <algorithm>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "kpgen/io.h"

namespace kpgen {

using json = nlohmann::json;

namespace {
constexpr int kIndexVersion = 1;
}

RetrievalIndex RetrievalIndex::build(const std::vector<TokenizedDoc>& docs, const StopWords& stopwords) {
  if (docs.empty()) throw std::invalid_argument("build_index: empty corpus");
  RetrievalIndex index;
  index.stopwords_ = stopwords;
  for (const auto& d : docs) index.entries_.push_back({d.doc_id, content_set(d.tokens, stopwords), d.gold_phrases});
  std::stable_sort(index.entries_.begin(), index.entries_.end(),
                   [](const Entry& a, const Entry& b) { return a.doc_id < b.doc_id; });
  for (size_t i = 1; i < index.entries_.size(); ++i)
    if (index.entries_[i].doc_id == index.entries_[i - 1].doc_id)
      throw std::invalid_argument("build_index: duplicate doc id " + index.entries_[i].doc_id);
  index.rebuild_postings();
  return index;
}

void RetrievalIndex::rebuild_postings() {
  postings_.clear();
  for (size_t i = 0; i < entries_.size(); ++i)
    for (const auto& term : entries_[i].terms) postings_[term].push_back(i);
}

RetrievalResult RetrievalIndex::retrieve(const TokenizedDoc& query, size_t k) const {
  if (k < 1) throw std::invalid_argument("retrieve: K must be >= 1");
  RetrievalResult result;
  result.k = k;
  if (entries_.empty()) return result;
  const auto q = content_set(query.tokens, stopwords_);
  std::vector<size_t> overlap(entries_.size(), 0);
  std::vector<size_t> touched;
  for (const auto& term : q) {
    auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    for (size_t d : it->second) {
      if (overlap[d]++ == 0) touched.push_back(d);
    }
  }
  struct Hit {
    size_t ordinal;
    double score;
  };
  std::vector<Hit> hits;
  for (size_t d : touched) {
    if (entries_[d].doc_id == query.doc_id) continue;
    const size_t inter = overlap[d];
    const size_t uni = q.size() + entries_[d].terms.size() - inter;
    hits.push_back({d, static_cast<double>(inter) / static_cast<double>(uni)});
  }
  std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.ordinal < b.ordinal;
  });
  if (hits.size() > k) hits.resize(k);
  for (const auto& h : hits) result.neighbors.push_back({entries_[h.ordinal].doc_id, h.score, entries_[h.ordinal].keyphrases});
  return result;
}

void RetrievalIndex::save(const std::string& path, const json& meta) const {
  json doc;
  doc["format"] = "kpgen-index";
  doc["version"] = kIndexVersion;
  doc["stopwords"] = stopwords_.sorted();
  json entries = json::array();
  for (const auto& e : entries_) entries.push_back({{"id", e.doc_id}, {"terms", e.terms}, {"keyphrases", e.keyphrases}});
  doc["docs"] = std::move(entries);
  doc["fingerprint"] = hex64(fingerprint());
  doc["meta"] = meta;
  atomic_write(path, doc.dump() + "\n");
}

RetrievalIndex RetrievalIndex::load(const std::string& path, json* meta) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw std::runtime_error("corrupt index " + path + ": " + e.what());
  }
  if (doc.value("format", "") != "kpgen-index") throw std::runtime_error(path + " is not a retrieval index");
  if (doc.value("version", 0) != kIndexVersion) throw std::runtime_error(path + ": unsupported index version");
  RetrievalIndex index;
  auto words = doc["stopwords"].get<std::vector<std::string>>();
  index.stopwords_ = StopWords(std::unordered_set<std::string>(words.begin(), words.end()));
  for (const auto& e : doc["docs"]) {
    index.entries_.push_back({e["id"].get<std::string>(), e["terms"].get<std::vector<std::string>>(),
                              e["keyphrases"].get<std::vector<Tokens>>()});
  }
  index.rebuild_postings();
  if (doc.contains("fingerprint") && doc["fingerprint"] != hex64(index.fingerprint()))
    throw std::runtime_error(path + ": index fingerprint mismatch");
  if (meta) *meta = doc.value("meta", json::object());
  return index;
}

uint64_t RetrievalIndex::fingerprint() const {
  uint64_t h = fnv1a("index");
  for (const auto& w : stopwords_.sorted()) h = fnv1a(w + "\n", h);
  for (const auto& e : entries_) {
    h = fnv1a(e.doc_id + "\x1f", h);
    for (const auto& t : e.terms) h = fnv1a(t + "\x1e", h);
    for (const auto& p : e.keyphrases) h = fnv1a(join_tokens(p) + "\x1d", h);
  }
  return h;
}

Tokens concat_retrieved(const RetrievalResult& result) {
  Tokens out;
  bool first = true;
  for (const auto& n : result.neighbors) {
    for (const auto& phrase : n.keyphrases) {
      if (!first) out.emplace_back(";");
      first = false;
      out.insert(out.end(), phrase.begin(), phrase.end());
    }
  }
  return out;
}

std::vector<ScoredPhrase> collect_retrieved_candidates(const RetrievalResult& result) {
  std::vector<ScoredPhrase> all;
  for (const auto& n : result.neighbors)
    for (const auto& phrase : n.keyphrases) all.push_back({phrase, n.score});
  return dedup_keep_max(std::move(all));
}

}  // namespace kpgen
