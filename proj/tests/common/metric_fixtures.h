#pragma once

// Hand-computed metric fixtures shared by the unit and acceptance tests.

#include <string>
#include <vector>

#include "kpgen/evalkit.h"

namespace kpgen::testing {

enum class Metric { P, R, F1, Map };

struct MetricFixture {
  std::string name;
  std::vector<std::string> preds;
  std::vector<std::string> gold;
  size_t k;
  Metric metric;
  double expected;
  bool min_denominator = true;
};

inline std::vector<MetricFixture> metric_fixtures() {
  const std::vector<std::string> ten = {"p1", "p2", "p3", "p4", "p5", "p6", "p7", "p8", "p9", "p10"};
  auto with = [&](std::vector<std::pair<size_t, std::string>> at) {
    auto v = ten;
    for (auto& [i, s] : at) v[i] = s;
    return v;
  };
  return {
      {"map single gold at rank 1", with({{0, "g"}}), {"g"}, 10, Metric::Map, 1.0},
      {"map single gold at rank 2", with({{1, "g"}}), {"g"}, 10, Metric::Map, 0.5},
      {"map two gold at ranks 1 and 3", with({{0, "a"}, {2, "b"}}), {"a", "b"}, 10, Metric::Map, (1.0 + 2.0 / 3.0) / 2},
      {"map ranks 2 and 4 of three gold", with({{1, "a"}, {3, "b"}}), {"a", "b", "c"}, 10, Metric::Map,
       (0.5 + 0.5) / 3},
      {"map more gold than k", ten, {"p1", "p2", "p3", "p4", "p5", "p6", "p7", "p8", "p9", "p10", "x", "y"}, 10,
       Metric::Map, 1.0},
      {"precision one of five", {"a", "x", "y", "z", "w"}, {"a", "b"}, 5, Metric::P, 0.2},
      {"recall one of two", {"a", "x", "y", "z", "w"}, {"a", "b"}, 5, Metric::R, 0.5},
      {"f1 one correct in top five", {"a", "x", "y", "z", "w"}, {"a", "b"}, 5, Metric::F1, 2 * 0.2 * 0.5 / 0.7},
      {"recall all gold in top k", {"a", "x", "b"}, {"a", "b"}, 5, Metric::R, 1.0},
      {"f1 zero correct", {"x", "y"}, {"a"}, 5, Metric::F1, 0.0},
      {"f1 stemmed match", {"parameter controls"}, {"parameter control"}, 5, Metric::F1, 1.0},
      {"f1@10 two of three preds, four gold", {"a", "b", "x"}, {"a", "b", "c", "d"}, 10, Metric::F1,
       2 * (2.0 / 3) * 0.5 / (2.0 / 3 + 0.5)},
      {"f1 with k denominator", {"a", "b", "x"}, {"a", "b"}, 5, Metric::F1, 2 * 0.4 * 1.0 / 1.4, false},
      {"recall counts duplicate gold once", {"neural nets"}, {"neural net", "neural nets"}, 5, Metric::R, 1.0},
      {"hit beyond k ignored", {"x1", "x2", "x3", "x4", "x5", "a"}, {"a"}, 5, Metric::F1, 0.0},
      {"empty predictions", {}, {"a"}, 5, Metric::F1, 0.0},
      {"empty predictions map", {}, {"a"}, 10, Metric::Map, 0.0},
  };
}

inline double evaluate_fixture(const MetricFixture& f) {
  std::vector<Tokens> preds, gold;
  for (const auto& p : f.preds) preds.push_back(tokenize(p));
  for (const auto& g : f.gold) gold.push_back(tokenize(g));
  MetricOptions opts;
  opts.min_denominator = f.min_denominator;
  switch (f.metric) {
    case Metric::P: return precision_at_k(preds, gold, f.k, opts);
    case Metric::R: return recall_at_k(preds, gold, f.k, opts);
    case Metric::F1: return f1_at_k(preds, gold, f.k, opts);
    case Metric::Map: return map_at_k(preds, gold, f.k, opts);
  }
  return -1;
}

}  // namespace kpgen::testing
