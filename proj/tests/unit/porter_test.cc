#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "kpgen/porter.h"

namespace kpgen {
namespace {

TEST(Porter, ReproducesReferenceVocabulary) {
  std::ifstream voc(std::string(KPGEN_TEST_DATA) + "/porter_voc.txt");
  std::ifstream out(std::string(KPGEN_TEST_DATA) + "/porter_output.txt");
  ASSERT_TRUE(voc.good());
  ASSERT_TRUE(out.good());
  std::string word, expected;
  size_t checked = 0, mismatches = 0;
  while (std::getline(voc, word) && std::getline(out, expected)) {
    if (word.empty()) continue;
    if (porter_stem(word) != expected) {
      if (++mismatches <= 10) ADD_FAILURE() << word << " -> " << porter_stem(word) << ", expected " << expected;
    }
    ++checked;
  }
  EXPECT_EQ(mismatches, 0u);
  EXPECT_GT(checked, 23000u);
}

TEST(Porter, ClassicExamples) {
  EXPECT_EQ(porter_stem("caresses"), "caress");
  EXPECT_EQ(porter_stem("ponies"), "poni");
  EXPECT_EQ(porter_stem("relational"), "relat");
  EXPECT_EQ(porter_stem("generalization"), "gener");
  EXPECT_EQ(porter_stem("hopping"), "hop");
  EXPECT_EQ(porter_stem("filing"), "file");
}

TEST(Porter, ShortAndNonAlphabeticTokensUnchanged) {
  EXPECT_EQ(porter_stem("a"), "a");
  EXPECT_EQ(porter_stem("is"), "is");
  EXPECT_EQ(porter_stem("<digit>"), "<digit>");
  EXPECT_EQ(porter_stem("x86"), "x86");
  EXPECT_EQ(porter_stem(""), "");
}

TEST(Porter, PhraseJoinsStems) {
  EXPECT_EQ(stem_phrase({"neural", "networks"}), "neural network");
  EXPECT_EQ(stem_phrase({}), "");
  EXPECT_EQ(stem_tokens({"clustering", "methods"}), (std::vector<std::string>{"cluster", "method"}));
}

}  // namespace
}  // namespace kpgen
