#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "stylemt/ngram_lm.hpp"
#include "stylemt/textproc.hpp"

namespace stylemt {

struct SelectError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Style { formal, informal, random_sample };

const char* style_name(Style style);  // "formal" / "informal" / "random"

// One aligned sentence pair. id is stable across runs and unique in a pool.
struct BitextPair {
    TokenSeq src;
    TokenSeq tgt;
    int64_t id = 0;
};

struct CedScore {
    int64_t id = 0;
    double score = 0.0;  // bits/token difference
};

// Selection result. pairs are sorted by ascending CED, ties by ascending id
// (random samples keep their drawn order). truncated marks N > pool size.
struct StyleSample {
    Style style = Style::formal;
    std::vector<BitextPair> pairs;
    int64_t requested = 0;
    bool truncated = false;
};

// Both sides non-empty, ids unique. Throws SelectError naming the offender.
void validate_bitext(const std::vector<BitextPair>& bitext);

// CED of the pair's English side. target_style formal gives
// H_formal(tgt) - H_informal(tgt); informal exchanges the roles (negation).
// Smaller is closer to the target style. MLE-mode inputs may yield infinite
// cross-entropies; a doubly-infinite difference (NaN) is rejected.
CedScore ced_score(const NGramModel& formal_lm, const NGramModel& informal_lm,
                   const BitextPair& pair, Style target_style);

// The n pairs with smallest CED for the style, via a bounded-size streaming
// selection (never materializes more than n candidates). n >= 1.
StyleSample ced_rank_select(const std::vector<BitextPair>& bitext,
                            const NGramModel& formal_lm, const NGramModel& informal_lm,
                            int64_t n, Style target_style);

// Uniform sample of n pairs without replacement, order permuted by the seed.
StyleSample random_select(const std::vector<BitextPair>& bitext, int64_t n, uint64_t seed);

// Keeps the first pair for each distinct English side, preserving order.
// The default upstream cleanup for selection pools.
std::vector<BitextPair> dedup_by_target(const std::vector<BitextPair>& bitext);

}  // namespace stylemt
