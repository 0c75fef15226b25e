#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "kpgen/corpus.h"

namespace kpgen {
namespace {

Document doc(const std::string& id, const std::string& title, const std::string& abstract,
             std::vector<std::string> keyphrases) {
  return Document{id, title, abstract, std::move(keyphrases)};
}

TEST(Dataset, ReadsLinesInOrder) {
  std::istringstream in(
      R"({"id":"a","title":"T1","abstract":"A1","keyphrases":["x"]})"
      "\n\n"
      R"({"id":"b","title":"T2","abstract":"A2","keyphrases":["y","z"]})"
      "\n");
  auto docs = parse_dataset(in);
  ASSERT_EQ(docs.size(), 2u);
  EXPECT_EQ(docs[0].id, "a");
  EXPECT_EQ(docs[1].keyphrases, (std::vector<std::string>{"y", "z"}));
}

TEST(Dataset, EmptyInput) {
  std::istringstream in("");
  EXPECT_TRUE(parse_dataset(in).empty());
}

TEST(Dataset, MissingKeyNamesLine) {
  std::istringstream in(R"({"id":"a","title":"t","abstract":"a","keyphrases":[]})"
                        "\n"
                        R"({"id":"b","title":"t","abstract":"a"})"
                        "\n");
  try {
    parse_dataset(in);
    FAIL() << "expected DatasetError";
  } catch (const DatasetError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("keyphrases"), std::string::npos);
  }
}

TEST(Dataset, MalformedAndDuplicateLinesRejected) {
  std::istringstream bad("{not json}\n");
  EXPECT_THROW(parse_dataset(bad), DatasetError);
  std::istringstream dup(R"({"id":"a","title":"t","abstract":"a","keyphrases":[]})"
                         "\n"
                         R"({"id":"a","title":"u","abstract":"b","keyphrases":[]})"
                         "\n");
  EXPECT_THROW(parse_dataset(dup), DatasetError);
}

TEST(Dataset, WriteThenParseRoundTrips) {
  std::vector<Document> docs = {doc("1", "Title", "Body \"quoted\".", {"a b", "c"}), doc("2", "", "", {})};
  std::ostringstream out;
  write_dataset(out, docs);
  std::istringstream in(out.str());
  auto back = parse_dataset(in);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].abstract, docs[0].abstract);
  EXPECT_EQ(back[0].keyphrases, docs[0].keyphrases);
}

TEST(Tokenize, HyphenatedAndTitleCase) {
  EXPECT_EQ(tokenize("Parameter Control"), (Tokens{"parameter", "control"}));
  EXPECT_EQ(tokenize("in 2019"), (Tokens{"in", "<digit>"}));
  EXPECT_EQ(tokenize("multi-agent systems"), (Tokens{"multi", "-", "agent", "systems"}));
}

TEST(TokenizeDocument, TitleThenAbstractWithPresence) {
  auto t = tokenize_document(doc("d", "Neural Parsing", "We parse trees.", {"neural parsing", "graph", ""}));
  EXPECT_EQ(t.tokens, (Tokens{"neural", "parsing", "we", "parse", "trees", "."}));
  ASSERT_EQ(t.gold_phrases.size(), 2u);
  EXPECT_EQ(t.present_mask, (std::vector<bool>{true, false}));
}

TEST(Vocabulary, ReservedTokensFirst) {
  Vocabulary v;
  EXPECT_EQ(v.size(), 5u);
  EXPECT_EQ(v.token_of(Vocabulary::kPad), "<pad>");
  EXPECT_EQ(v.token_of(Vocabulary::kUnk), "<unk>");
  EXPECT_EQ(v.token_of(Vocabulary::kBos), "<bos>");
  EXPECT_EQ(v.token_of(Vocabulary::kEos), "<eos>");
  EXPECT_EQ(v.token_of(Vocabulary::kSep), ";");
  EXPECT_EQ(v.index_of("never"), Vocabulary::kUnk);
}

TEST(Vocabulary, UnderCapacityKeepsAll) {
  TokenizedDoc d{"d", {"b", "a", "c", "a"}, {}, {}};
  auto v = Vocabulary::build({d});
  EXPECT_EQ(v.size(), 5u + 3u);
  EXPECT_EQ(v.token_of(5), "a");  // most frequent
  // Equal counts: lexicographic order.
  EXPECT_EQ(v.token_of(6), "b");
  EXPECT_EQ(v.token_of(7), "c");
}

TEST(Vocabulary, CapsAtMaxSize) {
  TokenizedDoc d;
  d.doc_id = "d";
  for (int i = 0; i < 60000; ++i) d.tokens.push_back("w" + std::to_string(i));
  auto v = Vocabulary::build({d}, 50000);
  EXPECT_EQ(v.size(), 50000u + 5u);
  EXPECT_THROW(Vocabulary::build({d}, 0), std::invalid_argument);
}

TEST(Vocabulary, GoldTokensCounted) {
  TokenizedDoc d{"d", {"x"}, {{"y", "y"}}, {false}};
  auto v = Vocabulary::build({d});
  EXPECT_EQ(v.token_of(5), "y");
  EXPECT_TRUE(v.contains("x"));
}

TEST(Vocabulary, SaveLoadRoundTrip) {
  TokenizedDoc d{"d", {"alpha", "beta", "beta"}, {}, {}};
  auto v = Vocabulary::build({d});
  const std::string path = ::testing::TempDir() + "/vocab_roundtrip.txt";
  v.save(path);
  auto back = Vocabulary::load(path);
  EXPECT_EQ(back.tokens(), v.tokens());
  EXPECT_EQ(back.fingerprint(), v.fingerprint());
}

TEST(GoldImportance, HandLabels) {
  EXPECT_EQ(gold_importance({"parameter", "control", "in", "optimization"}, {{"parameter", "control"}}),
            (std::vector<int>{1, 1, 0, 0}));
  EXPECT_EQ(gold_importance({"a", "b"}, {{"c", "d"}}), (std::vector<int>{0, 0}));
  EXPECT_EQ(gold_importance({"a", "b"}, {{"a"}, {"a", "b"}}), (std::vector<int>{1, 1}));
}

TEST(GoldImportance, StemmedVariantMatchesInflections) {
  EXPECT_EQ(gold_importance({"networks", "of"}, {{"network"}}), (std::vector<int>{0, 0}));
  EXPECT_EQ(gold_importance({"networks", "of"}, {{"network"}}, true), (std::vector<int>{1, 0}));
}

TEST(SplitTuples, OneTuplePerKeyphraseSharingSource) {
  auto t = tokenize_document(doc("d", "graph search", "fast graph search with heaps", {"graph search", "heaps", "trees"}));
  auto v = Vocabulary::build({t});
  auto tuples = split_tuples(t, {"x", ";", "y"}, v);
  ASSERT_EQ(tuples.size(), 3u);
  for (const auto& tt : tuples) {
    EXPECT_EQ(tt.x.ids, tuples[0].x.ids);
    EXPECT_EQ(tt.beta_star, tuples[0].beta_star);
    EXPECT_EQ(tt.y.back(), Vocabulary::kEos);
    EXPECT_EQ(tt.r.size(), 3u);
  }
  EXPECT_EQ(tuples[0].y.size(), 3u);
}

TEST(SplitTuples, SingleKeyphrase) {
  auto t = tokenize_document(doc("d", "t", "a b", {"a"}));
  EXPECT_EQ(split_tuples(t, {}, Vocabulary::build({t})).size(), 1u);
}

TEST(SplitTuples, OovTargetUsesCopyId) {
  TokenizedDoc d{"d", {"rare", "common", "common"}, {{"rare", "common"}, {"missing"}}, {true, false}};
  auto v = Vocabulary::from_tokens({"common"});
  auto tuples = split_tuples(d, {}, v);
  ASSERT_EQ(tuples.size(), 2u);
  const int common = v.index_of("common");
  EXPECT_EQ(tuples[0].y, (std::vector<int>{Vocabulary::kUnk, common, Vocabulary::kEos}));
  // "rare" is the first source OOV, so its extended id is |V|.
  EXPECT_EQ(tuples[0].y_target, (std::vector<int>{static_cast<int>(v.size()), common, Vocabulary::kEos}));
  EXPECT_EQ(tuples[0].x.ext_ids, (std::vector<int>{static_cast<int>(v.size()), common, common}));
  // Absent from both V and x: not producible.
  EXPECT_EQ(tuples[1].y_target, (std::vector<int>{-1, Vocabulary::kEos}));
}

TEST(SplitTuples, TruncatesSource) {
  TokenizedDoc d{"d", {"a", "b", "c", "d"}, {{"d"}}, {true}};
  auto tuples = split_tuples(d, {}, Vocabulary::from_tokens({"a", "b", "c", "d"}), 2);
  EXPECT_EQ(tuples[0].source, (Tokens{"a", "b"}));
  EXPECT_EQ(tuples[0].beta_star, (std::vector<int>{0, 0}));
}

TEST(DedupCorpus, ExactDuplicateDropped) {
  auto sw = StopWords::english();
  auto kept = dedup_corpus({doc("1", "t", "a b c", {}), doc("2", "t", "a b c", {})}, sw);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].id, "1");
}

TEST(DedupCorpus, DistinctUnchanged) {
  auto sw = StopWords::english();
  EXPECT_EQ(dedup_corpus({doc("1", "alpha", "beta", {}), doc("2", "gamma", "delta", {})}, sw).size(), 2u);
}

TEST(DedupCorpus, NearDuplicateAboveThreshold) {
  // 19 shared content words plus one extra: Jaccard 19/20 = 0.95.
  std::string base;
  for (int i = 0; i < 19; ++i) base += "w" + std::string(1, static_cast<char>('a' + i)) + " ";
  auto sw = StopWords::english();
  auto kept = dedup_corpus({doc("1", "", base, {}), doc("2", "", base + "extra", {})}, sw, 0.9);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].id, "1");
  EXPECT_EQ(dedup_corpus({doc("1", "", base, {}), doc("2", "", base + "extra", {})}, sw, 0.96).size(), 2u);
}

}  // namespace
}  // namespace kpgen
