#include <algorithm>
#include <set>
#include <string>

#include <gtest/gtest.h>

#include "../common/oracles.h"
#include "kpgen/autodiff.h"
#include "kpgen/retriever.h"

namespace kpgen {
namespace {

TEST(Index, SingleDocument) {
  auto idx = RetrievalIndex::build({testing::tdoc("a", {"graph", "search"})}, StopWords::english());
  EXPECT_EQ(idx.size(), 1u);
}

TEST(Index, StopWordsNeverPosted) {
  auto idx = RetrievalIndex::build({testing::tdoc("a", {"the", "x"}), testing::tdoc("b", {"the", "y"})}, StopWords::english());
  EXPECT_EQ(idx.postings().count("the"), 0u);
}

TEST(Index, PostingsMatchMembershipScan) {
  std::vector<TokenizedDoc> docs = {testing::tdoc("c", {"x", "y"}), testing::tdoc("a", {"y", "z", "the"}), testing::tdoc("b", {"x", "z", "z"})};
  auto sw = StopWords::english();
  auto idx = RetrievalIndex::build(docs, sw);
  std::set<std::string> vocab;
  for (const auto& d : docs)
    for (const auto& t : content_set(d.tokens, sw)) vocab.insert(t);
  EXPECT_EQ(idx.postings().size(), vocab.size());
  for (const auto& term : vocab) {
    std::vector<std::string> expected;
    for (const auto& d : docs) {
      auto s = content_set(d.tokens, sw);
      if (std::binary_search(s.begin(), s.end(), term)) expected.push_back(d.doc_id);
    }
    std::sort(expected.begin(), expected.end());
    std::vector<std::string> got;
    for (size_t ord : idx.postings().at(term)) got.push_back(idx.entries()[ord].doc_id);
    EXPECT_EQ(got, expected) << term;
  }
}

TEST(Index, AllStopWordDocumentNeverRetrieved) {
  auto idx = RetrievalIndex::build({testing::tdoc("a", {"the", "of"}), testing::tdoc("b", {"x"})}, StopWords::english());
  auto res = idx.retrieve(testing::tdoc("q", {"the", "x", "of"}), 3);
  ASSERT_EQ(res.neighbors.size(), 1u);
  EXPECT_EQ(res.neighbors[0].doc_id, "b");
}

TEST(Retrieve, IdenticalDocumentFirstWithScoreOne) {
  auto idx = RetrievalIndex::build({testing::tdoc("a", {"x", "y"}), testing::tdoc("b", {"graph", "search"})}, StopWords::english());
  auto res = idx.retrieve(testing::tdoc("q", {"search", "graph"}), 3);
  ASSERT_FALSE(res.neighbors.empty());
  EXPECT_EQ(res.neighbors[0].doc_id, "b");
  EXPECT_DOUBLE_EQ(res.neighbors[0].score, 1.0);
}

TEST(Retrieve, SelfExcluded) {
  auto idx = RetrievalIndex::build({testing::tdoc("a", {"x", "y"}), testing::tdoc("b", {"x"})}, StopWords::english());
  auto res = idx.retrieve(testing::tdoc("a", {"x", "y"}), 3);
  for (const auto& n : res.neighbors) EXPECT_NE(n.doc_id, "a");
}

TEST(Retrieve, RejectsZeroK) {
  auto idx = RetrievalIndex::build({testing::tdoc("a", {"x"})}, StopWords::english());
  EXPECT_THROW(idx.retrieve(testing::tdoc("q", {"x"}), 0), std::invalid_argument);
}

TEST(Retrieve, TenDocumentsMatchBruteForce) {
  Rng rng(7);
  auto corpus = testing::random_corpus(rng, 10, 8, "d");
  auto sw = StopWords::english();
  auto idx = RetrievalIndex::build(corpus, sw);
  for (int q = 0; q < 20; ++q) {
    auto query = testing::random_corpus(rng, 1, 8, "q")[0];
    auto expected = testing::brute_force_retrieve(corpus, query, sw, 10);
    auto got = idx.retrieve(query, 10);
    ASSERT_EQ(got.neighbors.size(), expected.size());
    for (size_t i = 0; i < expected.size(); ++i) {
      EXPECT_EQ(got.neighbors[i].doc_id, expected[i].first);
      EXPECT_EQ(got.neighbors[i].score, expected[i].second);
    }
  }
}

TEST(Retrieve, SaveLoadPreservesResultsAndMeta) {
  Rng rng(3);
  auto corpus = testing::random_corpus(rng, 30, 20, "d");
  auto idx = RetrievalIndex::build(corpus, StopWords::english());
  const std::string path = ::testing::TempDir() + "/index_roundtrip.json";
  idx.save(path, {{"config_hash", "abc"}});
  nlohmann::json meta;
  auto back = RetrievalIndex::load(path, &meta);
  EXPECT_EQ(meta["config_hash"], "abc");
  EXPECT_EQ(back.fingerprint(), idx.fingerprint());
  auto q = testing::random_corpus(rng, 1, 20, "q")[0];
  auto a = idx.retrieve(q, 3), b = back.retrieve(q, 3);
  ASSERT_EQ(a.neighbors.size(), b.neighbors.size());
  for (size_t i = 0; i < a.neighbors.size(); ++i) EXPECT_EQ(a.neighbors[i].doc_id, b.neighbors[i].doc_id);
}

TEST(ConcatRetrieved, SeparatorsBetweenPhrases) {
  RetrievalResult one;
  one.neighbors.push_back({"n", 0.5, {{"a", "b"}, {"c"}}});
  EXPECT_EQ(concat_retrieved(one), (Tokens{"a", "b", ";", "c"}));
  EXPECT_TRUE(concat_retrieved(RetrievalResult{}).empty());
  RetrievalResult two;
  two.neighbors.push_back({"n", 0.5, {{"a"}, {"b"}}});
  two.neighbors.push_back({"m", 0.4, {{"c", "d"}}});
  auto toks = concat_retrieved(two);
  EXPECT_EQ(std::count(toks.begin(), toks.end(), ";"), 2);
}

TEST(RetrievedCandidates, DuplicateKeepsHigherScore) {
  RetrievalResult res;
  res.neighbors.push_back({"n1", 0.6, {{"graph", "search"}, {"trees"}, {"heaps"}}});
  res.neighbors.push_back({"n2", 0.4, {{"graph", "searches"}, {"queues"}}});
  res.neighbors.push_back({"n3", 0.3, {{"stacks"}, {"lists"}}});
  auto cands = collect_retrieved_candidates(res);
  ASSERT_EQ(cands.size(), 6u);
  EXPECT_EQ(cands[0].text(), "graph search");
  EXPECT_DOUBLE_EQ(cands[0].score, 0.6);
  // Ties broken by surface text.
  EXPECT_EQ(cands[1].text(), "heaps");
  EXPECT_EQ(cands[2].text(), "trees");
  EXPECT_EQ(cands[3].text(), "queues");
  EXPECT_DOUBLE_EQ(cands[3].score, 0.4);
  EXPECT_EQ(cands[4].text(), "lists");
  EXPECT_EQ(cands[5].text(), "stacks");
  EXPECT_TRUE(collect_retrieved_candidates(RetrievalResult{}).empty());
}

}  // namespace
}  // namespace kpgen
