#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

namespace kpgen {

struct BeamOptions {
  size_t depth = 6;    // maximum phrase length in tokens, excluding <eos>
  size_t size = 200;   // hypotheses kept per step (finished ones included)
  int eos = 3;
  bool length_normalize = true;  // score = log-prob / (tokens + 1)
  std::vector<int> banned;       // never expanded
};

struct BeamHypothesis {
  std::vector<int> tokens;  // without <eos>
  double log_prob = 0.0;    // sum of per-step log-probabilities including <eos>
  double score = 0.0;
};

inline double beam_score(double log_prob, size_t phrase_len, bool length_normalize) {
  return length_normalize ? log_prob / static_cast<double>(phrase_len + 1) : log_prob;
}

// Orders finished hypotheses by score descending, then token sequence.
inline void sort_hypotheses(std::vector<BeamHypothesis>& hyps) {
  std::sort(hyps.begin(), hyps.end(), [](const BeamHypothesis& a, const BeamHypothesis& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.tokens < b.tokens;
  });
}

// `step(state, last_token)` returns log-probabilities over the output space and
// the successor state. Every step expands each live hypothesis by all
// non-banned tokens and keeps the `size` best by cumulative log-prob; a kept
// <eos> finishes its hypothesis. Empty phrases are not allowed, and after
// `depth` tokens only <eos> may follow.
template <typename State>
std::vector<BeamHypothesis> beam_search(
    State initial, int start_token,
    const std::function<std::pair<std::vector<double>, State>(const State&, int)>& step,
    const BeamOptions& options) {
  struct Live {
    std::vector<int> tokens;
    double log_prob;
    State state;
    int last;
  };
  struct Expansion {
    size_t parent;
    int token;
    double log_prob;
  };

  std::vector<bool> banned;
  std::vector<Live> live;
  live.push_back({{}, 0.0, std::move(initial), start_token});
  std::vector<BeamHypothesis> finished;

  for (size_t t = 0; t <= options.depth && !live.empty(); ++t) {
    std::vector<Expansion> cand;
    std::vector<State> next_states;
    next_states.reserve(live.size());
    for (size_t h = 0; h < live.size(); ++h) {
      auto [logp, next] = step(live[h].state, live[h].last);
      next_states.push_back(std::move(next));
      if (banned.size() < logp.size()) {
        banned.assign(logp.size(), false);
        for (int b : options.banned)
          if (b >= 0 && static_cast<size_t>(b) < banned.size()) banned[static_cast<size_t>(b)] = true;
      }
      for (size_t tok = 0; tok < logp.size(); ++tok) {
        const int token = static_cast<int>(tok);
        if (banned[tok]) continue;
        const bool is_eos = token == options.eos;
        if (is_eos && live[h].tokens.empty()) continue;
        if (!is_eos && t == options.depth) continue;
        if (std::isinf(logp[tok]) && logp[tok] < 0) continue;
        cand.push_back({h, token, live[h].log_prob + logp[tok]});
      }
    }
    auto better = [](const Expansion& a, const Expansion& b) {
      if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
      if (a.parent != b.parent) return a.parent < b.parent;
      return a.token < b.token;
    };
    if (cand.size() > options.size) {
      std::nth_element(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(options.size), cand.end(), better);
      cand.resize(options.size);
    }
    std::sort(cand.begin(), cand.end(), better);

    std::vector<Live> next_live;
    for (const auto& c : cand) {
      std::vector<int> tokens = live[c.parent].tokens;
      if (c.token == options.eos) {
        const size_t len = tokens.size();
        finished.push_back({std::move(tokens), c.log_prob, beam_score(c.log_prob, len, options.length_normalize)});
        continue;
      }
      tokens.push_back(c.token);
      next_live.push_back({std::move(tokens), c.log_prob, next_states[c.parent], c.token});
    }
    live = std::move(next_live);
  }
  sort_hypotheses(finished);
  return finished;
}

}  // namespace kpgen
