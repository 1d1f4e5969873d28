#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "stylemt/seq2seq.hpp"

namespace stylemt {

struct BeamHyp {
    std::vector<int32_t> tokens;  // emitted ids, without <s> or </s>
    double score = 0.0;           // summed log-probability, non-increasing
    bool finished = false;        // ended with </s>
};

// Beam search over a step scorer. Scorer contract:
//   State start() const;
//   step(const State&, int32_t last_token) -> std::pair<Eigen::VectorXd, State>
// where the vector holds log-probabilities over the vocabulary and last_token
// is SeqVocab::kBos on the first step. <pad> and <s> are never emitted.
// Candidate ties break on (higher score, lower token id, lower parent index);
// among equal-scoring finished hypotheses the first produced wins. If nothing
// finishes within max_len steps the best alive hypothesis is returned.
template <typename Scorer>
BeamHyp beam_search(const Scorer& scorer, int64_t beam, int64_t max_len) {
    if (beam < 1) throw ModelError("beam must be >= 1");

    struct Alive {
        std::vector<int32_t> tokens;
        double score;
        typename Scorer::State state;
        int32_t last;
    };
    std::vector<Alive> alive;
    alive.push_back({{}, 0.0, scorer.start(), SeqVocab::kBos});

    BeamHyp best_finished;
    bool have_finished = false;

    struct Candidate {
        double score;
        int32_t token;
        size_t parent;
    };

    for (int64_t t = 0; t < max_len && !alive.empty(); ++t) {
        std::vector<Candidate> candidates;
        std::vector<typename Scorer::State> next_states(alive.size());
        for (size_t p = 0; p < alive.size(); ++p) {
            auto [log_probs, state] = scorer.step(alive[p].state, alive[p].last);
            next_states[p] = std::move(state);
            for (int32_t v = 0; v < static_cast<int32_t>(log_probs.size()); ++v) {
                if (v == SeqVocab::kPad || v == SeqVocab::kBos) continue;
                candidates.push_back({alive[p].score + log_probs(v), v, p});
            }
        }
        std::sort(candidates.begin(), candidates.end(),
                  [](const Candidate& a, const Candidate& b) {
                      if (a.score != b.score) return a.score > b.score;
                      if (a.token != b.token) return a.token < b.token;
                      return a.parent < b.parent;
                  });

        std::vector<Alive> next;
        for (const Candidate& c : candidates) {
            if (static_cast<int64_t>(next.size()) >= beam) break;
            if (c.token == SeqVocab::kEos) {
                if (!have_finished || c.score > best_finished.score) {
                    best_finished.tokens = alive[c.parent].tokens;
                    best_finished.score = c.score;
                    best_finished.finished = true;
                    have_finished = true;
                }
                continue;
            }
            Alive a;
            a.tokens = alive[c.parent].tokens;
            a.tokens.push_back(c.token);
            a.score = c.score;
            a.state = next_states[c.parent];
            a.last = c.token;
            next.push_back(std::move(a));
        }
        alive = std::move(next);

        // log-probabilities only shrink scores, so nothing alive can beat a
        // finished hypothesis that already scores at least as high
        if (have_finished && (alive.empty() || best_finished.score >= alive.front().score))
            return best_finished;
    }

    if (have_finished) return best_finished;
    if (alive.empty()) throw ModelError("beam search emptied without a hypothesis");
    BeamHyp truncated;
    truncated.tokens = alive.front().tokens;
    truncated.score = alive.front().score;
    truncated.finished = false;
    return truncated;
}

}  // namespace stylemt
