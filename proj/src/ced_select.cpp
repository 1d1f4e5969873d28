#include "stylemt/ced_select.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <unordered_set>

#include "stylemt/util/io.hpp"
#include "stylemt/util/rng.hpp"

namespace stylemt {

const char* style_name(Style style) {
    switch (style) {
        case Style::formal: return "formal";
        case Style::informal: return "informal";
        case Style::random_sample: return "random";
    }
    return "?";
}

void validate_bitext(const std::vector<BitextPair>& bitext) {
    std::unordered_set<int64_t> seen;
    for (const auto& pair : bitext) {
        if (pair.src.empty() || pair.tgt.empty())
            throw SelectError("pair " + std::to_string(pair.id) + ": empty side");
        if (!seen.insert(pair.id).second)
            throw SelectError("duplicate pair id " + std::to_string(pair.id));
    }
}

CedScore ced_score(const NGramModel& formal_lm, const NGramModel& informal_lm,
                   const BitextPair& pair, Style target_style) {
    double h_formal = formal_lm.cross_entropy(pair.tgt);
    double h_informal = informal_lm.cross_entropy(pair.tgt);
    double score = target_style == Style::informal ? h_informal - h_formal
                                                   : h_formal - h_informal;
    if (std::isnan(score))
        throw SelectError("pair " + std::to_string(pair.id) +
                          ": cross-entropy infinite under both models");
    return CedScore{pair.id, score};
}

StyleSample ced_rank_select(const std::vector<BitextPair>& bitext,
                            const NGramModel& formal_lm, const NGramModel& informal_lm,
                            int64_t n, Style target_style) {
    if (n < 1) throw SelectError("selection size must be >= 1");
    if (target_style == Style::random_sample)
        throw SelectError("CED ranking needs a formal or informal target");

    struct Candidate {
        double score;
        int64_t id;
        size_t index;
        bool operator<(const Candidate& other) const {  // max-heap on (score, id)
            if (score != other.score) return score < other.score;
            return id < other.id;
        }
    };
    // Bounded streaming top-n: the heap root is the worst kept candidate.
    std::priority_queue<Candidate> heap;
    for (size_t i = 0; i < bitext.size(); ++i) {
        CedScore s = ced_score(formal_lm, informal_lm, bitext[i], target_style);
        Candidate c{s.score, s.id, i};
        if (heap.size() < static_cast<size_t>(n)) {
            heap.push(c);
        } else if (c < heap.top()) {
            heap.pop();
            heap.push(c);
        }
    }

    std::vector<Candidate> kept;
    kept.reserve(heap.size());
    while (!heap.empty()) {
        kept.push_back(heap.top());
        heap.pop();
    }
    std::reverse(kept.begin(), kept.end());  // heap drains worst-first

    StyleSample sample;
    sample.style = target_style;
    sample.requested = n;
    sample.truncated = static_cast<size_t>(n) > bitext.size();
    sample.pairs.reserve(kept.size());
    for (const auto& c : kept) sample.pairs.push_back(bitext[c.index]);
    return sample;
}

StyleSample random_select(const std::vector<BitextPair>& bitext, int64_t n, uint64_t seed) {
    if (n < 1) throw SelectError("selection size must be >= 1");
    StyleSample sample;
    sample.style = Style::random_sample;
    sample.requested = n;
    sample.truncated = static_cast<size_t>(n) > bitext.size();
    size_t take = std::min(static_cast<size_t>(n), bitext.size());

    std::vector<size_t> order(bitext.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    // Partial Fisher-Yates: the first `take` slots are a uniform sample.
    for (size_t i = 0; i < take; ++i) {
        size_t j = i + static_cast<size_t>(rng.below(order.size() - i));
        std::swap(order[i], order[j]);
    }
    sample.pairs.reserve(take);
    for (size_t i = 0; i < take; ++i) sample.pairs.push_back(bitext[order[i]]);
    return sample;
}

std::vector<BitextPair> dedup_by_target(const std::vector<BitextPair>& bitext) {
    std::vector<BitextPair> out;
    std::unordered_set<std::string> seen;
    for (const auto& pair : bitext) {
        if (seen.insert(join(pair.tgt, " ")).second) out.push_back(pair);
    }
    return out;
}

}  // namespace stylemt
