#include <gtest/gtest.h>

#include "../common/metric_fixtures.h"
#include "kpgen/evalkit.h"

namespace kpgen {
namespace {

std::vector<Tokens> phrases(std::initializer_list<const char*> list) {
  std::vector<Tokens> out;
  for (const char* s : list) out.push_back(tokenize(s));
  return out;
}

TEST(Metrics, HandComputedFixtures) {
  const auto fixtures = testing::metric_fixtures();
  EXPECT_GE(fixtures.size(), 10u);
  for (const auto& f : fixtures) EXPECT_NEAR(testing::evaluate_fixture(f), f.expected, 1e-12) << f.name;
}

TEST(Match, StemmedEquality) {
  EXPECT_TRUE(match(tokenize("parameter controls"), tokenize("parameter control")));
  EXPECT_TRUE(match(tokenize("graph"), tokenize("graph")));
  EXPECT_FALSE(match(tokenize("graph search"), tokenize("graph")));
}

TEST(Dedup, KeepsFirstPerStem) {
  EXPECT_EQ(dedup_predictions(phrases({"neural nets", "neural net"})), phrases({"neural nets"}));
  EXPECT_EQ(dedup_predictions(phrases({"a", "b"})), phrases({"a", "b"}));
  EXPECT_TRUE(dedup_predictions({}).empty());
}

TEST(SelectFinal, Profiles) {
  const auto singles = phrases({"graphs", "x y", "trees", "heaps"});
  EXPECT_EQ(select_final(singles, Profile::Kp20k), singles);
  EXPECT_EQ(select_final(singles, Profile::Other), phrases({"graphs", "x y"}));
  const auto multi = phrases({"a b", "c d"});
  EXPECT_EQ(select_final(multi, Profile::Kp20k), multi);
  EXPECT_EQ(select_final(multi, Profile::Other), multi);
}

TEST(SplitPresentAbsent, MixedGold) {
  const Tokens source = tokenize("deep parsing of graph structures");
  auto s = split_present_absent(phrases({"graph structure", "tree"}), phrases({"deep parsing", "graph structures", "kernels"}),
                                source);
  EXPECT_EQ(s.present.gold.size(), 2u);
  EXPECT_EQ(s.absent.gold.size(), 1u);
  EXPECT_EQ(s.present.preds, phrases({"graph structure"}));
  EXPECT_EQ(s.absent.preds, phrases({"tree"}));
}

TEST(Profile, ParseRoundTrip) {
  for (auto p : {Profile::Kp20k, Profile::Other, Profile::Semeval}) EXPECT_EQ(parse_profile(to_string(p)), p);
  EXPECT_THROW(parse_profile("inspec"), std::invalid_argument);
}

TEST(Evaluate, MacroAveragesAndSkipsEmptySplits) {
  std::vector<EvalDocument> docs;
  docs.push_back({"d1", phrases({"graph search", "x", "y", "z", "w"}), phrases({"graph search", "absent thing"}),
                  tokenize("fast graph search")});
  docs.push_back({"d2", phrases({"trees"}), phrases({"trees"}), tokenize("trees and heaps")});
  auto r = evaluate_documents(docs, Profile::Kp20k);
  // d1: P=1/5, R=1/2 → F1 = 2/7; d2: F1 = 1.
  EXPECT_NEAR(r["total"]["f1@5"].get<double>(), (2.0 / 7.0 + 1.0) / 2, 1e-12);
  EXPECT_EQ(r["present"]["documents"], 2);
  // Only d1 has absent gold.
  EXPECT_EQ(r["absent"]["documents"], 1);
  EXPECT_NEAR(r["absent"]["r@10"].get<double>(), 0.0, 1e-12);
  EXPECT_EQ(r["per_document"].size(), 2u);
}

TEST(Evaluate, OtherProfileDropsExtraSingleWords) {
  std::vector<EvalDocument> docs;
  docs.push_back({"d", phrases({"x", "trees", "heaps"}), phrases({"trees"}), tokenize("trees")});
  EXPECT_NEAR(evaluate_documents(docs, Profile::Kp20k)["total"]["f1@5"].get<double>(), 0.5, 1e-12);
  EXPECT_NEAR(evaluate_documents(docs, Profile::Other)["total"]["f1@5"].get<double>(), 0.0, 1e-12);
}

TEST(Evaluate, SemevalGoldNotStemmed) {
  std::vector<EvalDocument> docs;
  // Gold already stemmed; predictions are stemmed before comparison.
  docs.push_back({"d", phrases({"neural networks"}), phrases({"neural network"}), tokenize("neural networks")});
  docs.push_back({"e", phrases({"parsing"}), phrases({"parsing"}), tokenize("parsing")});
  auto r = evaluate_documents(docs, Profile::Semeval);
  auto rows = r["per_document"];
  EXPECT_NEAR(rows[0]["f1@5"].get<double>(), 1.0, 1e-12);
  EXPECT_NEAR(rows[1]["f1@5"].get<double>(), 0.0, 1e-12);
}

}  // namespace
}  // namespace kpgen
