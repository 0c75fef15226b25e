#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kpgen/corpus.h"

namespace kpgen {

struct ToyCorpus {
  std::vector<Document> train;  // 50 documents
  std::vector<Document> valid;  // 10
  std::vector<Document> test;   // 10
};

// Synthetic abstracts over ten topics. Every document has five keyphrases:
// three two-word technical phrases that occur in its text and two topic
// phrases that never do, shared with the other documents of its topic.
ToyCorpus generate_toy_corpus(uint64_t seed = 20190601);

// Writes train.jsonl, valid.jsonl and test.jsonl into `dir`.
void write_toy_corpus(const std::string& dir, const ToyCorpus& corpus);

}  // namespace kpgen
