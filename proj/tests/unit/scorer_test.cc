#include <filesystem>
#include <set>

#include <gtest/gtest.h>

#include "../common/finite_diff.h"
#include "kpgen/porter.h"
#include "kpgen/scorer.h"

namespace kpgen {
namespace {

ScorerConfig small_config() {
  ScorerConfig c;
  c.embedding_dim = 4;
  c.hidden_dim = 4;
  c.attend_dim = 3;
  c.aggregate_dim = 3;
  c.dropout = 0.0;
  c.init_range = 0.3;
  c.batch_size = 8;
  c.lr = 0.02;
  return c;
}

Vocabulary small_vocab() {
  return Vocabulary::from_tokens({"graph", "search", "tree", "heap", "model", "learning", "over", "fast"});
}

TokenizedDoc doc_of(const std::string& id, const std::string& text, std::vector<std::string> gold) {
  TokenizedDoc d;
  d.doc_id = id;
  d.tokens = tokenize(text);
  for (const auto& g : gold) d.gold_phrases.push_back(tokenize(g));
  return d;
}

TEST(Scorer, OutputIsProbability) {
  auto vocab = small_vocab();
  Scorer s(small_config(), vocab.size());
  s.init(1);
  auto doc = to_ids(tokenize("fast graph search over tree"), vocab);
  auto probs = s.score_all(doc, {{5}, {5, 6}, {9, 10, 11}});
  ASSERT_EQ(probs.size(), 3u);
  for (double p : probs) {
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
  }
  EXPECT_DOUBLE_EQ(s.score(doc, {5, 6}), probs[1]);
  EXPECT_THROW(s.score(doc, {}), std::invalid_argument);
  EXPECT_THROW(s.score({}, {5}), std::invalid_argument);
}

TEST(Scorer, GradientMatchesFiniteDifferences) {
  auto vocab = small_vocab();
  Scorer s(small_config(), vocab.size());
  s.init(2);
  auto doc = to_ids(tokenize("graph search over tree"), vocab);
  auto check = testing::check_gradients(s.params().all(), [&](Tape& t) {
    auto enc = s.encode_document(t, doc);
    Var z = s.logit(t, enc, {5, 6});
    return scale(log(sigmoid(z)), -1.0);
  }, 1e-5, 1e-6);  // round-off in a loss of order 1 is about 1e-11 at h = 1e-5
  EXPECT_LT(check.max_rel_error, 1e-4) << check.worst;
}

TEST(Negatives, ExcludeGoldAndAreDistinct) {
  auto doc = doc_of("d", "graph search over trees , fast heaps", {"graph search", "heaps"});
  std::vector<Tokens> retrieved = {tokenize("graph searches"), tokenize("model"), tokenize("learning")};
  Rng rng(4);
  auto negs = sample_negatives(doc, retrieved, 6, 0.5, rng);
  EXPECT_EQ(negs.size(), 6u);
  std::set<std::string> stems;
  for (const auto& n : negs) {
    const auto key = stem_phrase(n);
    EXPECT_NE(key, stem_phrase(tokenize("graph search")));
    EXPECT_NE(key, stem_phrase(tokenize("heaps")));
    EXPECT_TRUE(stems.insert(key).second);
    for (const auto& t : n) EXPECT_FALSE(is_punctuation_token(t));
  }
}

TEST(Negatives, ShortPoolsReturnFewer) {
  auto doc = doc_of("d", "graph", {"graph"});
  Rng rng(1);
  EXPECT_TRUE(sample_negatives(doc, {}, 4, 0.5, rng).empty());
  EXPECT_EQ(sample_negatives(doc, {tokenize("tree")}, 4, 0.5, rng).size(), 1u);
  EXPECT_THROW(sample_negatives(doc, {}, 0, 0.5, rng), std::invalid_argument);
}

TEST(Negatives, DeterministicForSeed) {
  auto doc = doc_of("d", "a b c d e f g h", {"c d"});
  std::vector<Tokens> retrieved = {tokenize("x"), tokenize("y z")};
  Rng r1(9), r2(9);
  EXPECT_EQ(sample_negatives(doc, retrieved, 5, 0.6, r1), sample_negatives(doc, retrieved, 5, 0.6, r2));
}

TEST(Examples, PositivesThenNegatives) {
  auto vocab = small_vocab();
  auto doc = doc_of("d", "fast graph search over tree model", {"graph search", "heap"});
  auto cfg = small_config();
  cfg.negative_ratio = 2;
  Rng rng(3);
  auto ex = make_scorer_examples(doc, {tokenize("learning")}, vocab, cfg, rng);
  ASSERT_EQ(ex.size(), 6u);
  EXPECT_EQ(ex[0].label, 1);
  EXPECT_EQ(ex[1].label, 1);
  for (size_t i = 2; i < ex.size(); ++i) EXPECT_EQ(ex[i].label, 0);
  EXPECT_EQ(ex[0].candidate, (std::vector<int>{vocab.index_of("graph"), vocab.index_of("search")}));
}

TEST(TrainScorer, SingleClassRejected) {
  auto vocab = small_vocab();
  Scorer s(small_config(), vocab.size());
  s.init(1);
  std::vector<ScorerExample> only_pos = {{"d", {5, 6}, {5}, 1}};
  EXPECT_THROW(train_scorer(s, only_pos, {}, 1), std::invalid_argument);
}

// The label depends on the candidate token only: ids 5-8 are positive.
std::vector<ScorerExample> separable_set() {
  std::vector<ScorerExample> out;
  const std::vector<std::vector<int>> docs = {{5, 6, 7}, {8, 9, 10}, {11, 12, 5}, {6, 8, 11}};
  for (size_t d = 0; d < docs.size(); ++d)
    for (int tok = 5; tok <= 12; ++tok) out.push_back({"d" + std::to_string(d), docs[d], {tok}, tok <= 8 ? 1 : 0});
  return out;
}

TEST(TrainScorer, LearnsSeparableData) {
  auto vocab = small_vocab();
  auto data = separable_set();
  auto cfg = small_config();
  cfg.max_epochs = 100;
  cfg.patience = 100;
  Scorer s(cfg, vocab.size());
  s.init(5);
  auto r = train_scorer(s, data, data, 5);
  EXPECT_DOUBLE_EQ(r.best_valid_accuracy, 1.0);
  EXPECT_DOUBLE_EQ(scorer_accuracy(s, data), 1.0);
}

TEST(TrainScorer, DeterministicAndKeepsBest) {
  auto vocab = small_vocab();
  auto data = separable_set();
  auto cfg = small_config();
  cfg.max_epochs = 8;
  cfg.patience = 3;
  auto run = [&]() {
    Scorer s(cfg, vocab.size());
    s.init(6);
    auto r = train_scorer(s, data, data, 6);
    return std::make_pair(r, scorer_accuracy(s, data));
  };
  auto [a, acc_a] = run();
  auto [b, acc_b] = run();
  ASSERT_EQ(a.log.size(), b.log.size());
  for (size_t i = 0; i < a.log.size(); ++i) EXPECT_EQ(a.log[i].to_json(), b.log[i].to_json());
  EXPECT_EQ(acc_a, acc_b);
  EXPECT_DOUBLE_EQ(acc_a, a.best_valid_accuracy);
}

TEST(Scorer, SaveLoadRoundTrip) {
  auto vocab = small_vocab();
  Scorer s(small_config(), vocab.size());
  s.init(7);
  const auto path = std::filesystem::temp_directory_path() / "kpgen_scorer_test.ckpt";
  s.save(path.string());
  auto back = Scorer::load(path.string());
  std::filesystem::remove(path);
  EXPECT_EQ(back.score({5, 6, 7}, {6}), s.score({5, 6, 7}, {6}));
  EXPECT_EQ(back.config().to_json(), s.config().to_json());
}

TEST(ScorerConfig, Validate) {
  auto c = small_config();
  c.validate();
  c.span_fraction = 1.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = small_config();
  c.hidden_dim = 3;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace kpgen
