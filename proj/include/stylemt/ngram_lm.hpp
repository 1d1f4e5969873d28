#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "stylemt/textproc.hpp"

namespace stylemt {

struct LmError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Token ids. <s> is context-only and never predicted.
inline constexpr int kUnkId = 0;
inline constexpr int kBosId = 1;
inline constexpr int kEosId = 2;

class LmVocab {
public:
    LmVocab();

    // Adds regular tokens in sorted order for a deterministic id assignment.
    static LmVocab build(const std::vector<std::string>& sorted_tokens);

    int id(const std::string& token) const;  // kUnkId when absent or reserved
    const std::string& token(int id) const { return id_to_token_.at(id); }
    int size() const { return static_cast<int>(id_to_token_.size()); }

private:
    std::vector<std::string> id_to_token_;
    std::unordered_map<std::string, int> token_to_id_;
};

// Interpolated absolute-discounting n-gram model with an MLE mode.
//
// Counting: every sentence is padded with order-1 <s> symbols on the left and
// emits its tokens plus a final </s>. For each order k and each emitted
// position, the k-gram ending at that position and its (k-1)-token context
// are counted. <s> is never an event.
//
// Probabilities over the predicted set P = vocab \ {<s>}:
//   order 1:  p(w) = max(c(w)-D1, 0)/N + (D1*V1/N) * 1/|P|
//   order k:  p(w|h) = max(c(hw)-Dk, 0)/c(h) + (Dk*distinct(h)/c(h)) * p(w|h')
//             (h' drops the oldest context token; unseen h falls through)
// Discounts come from count-of-counts, Dk = n1/(n1 + 2*n2), clamped to
// [0.01, 0.99]. MLE mode sets every Dk = 0; unseen events then have
// probability zero and score as +infinity cross-entropy.
class NGramModel {
public:
    struct Options {
        int order = 3;
        int min_count = 1;
        bool mle = false;  // no discounting; for oracles and hand checks
    };

    static NGramModel train(const std::vector<TokenSeq>& corpus, const Options& options);

    int order() const { return options_.order; }
    const Options& options() const { return options_; }
    const LmVocab& vocab() const { return vocab_; }
    double discount(int order) const { return discounts_.at(order - 1); }

    // p(event | context), context given oldest-first; uses the last order-1
    // entries. event must not be <s>.
    double prob(const std::vector<int>& context, int event) const;

    // Bits per token, scoring each token plus the final </s> against
    // <s>-padded contexts. Unknown tokens score as <unk>.
    double cross_entropy(const TokenSeq& sentence) const;

    std::vector<int> encode(const TokenSeq& sentence) const;

    // Observed contexts of a given length (0..order-1), one per entry,
    // oldest-first; deterministic order. Drives normalization checks.
    std::vector<std::vector<int>> observed_contexts(int length) const;

    std::string to_arpa() const;
    static NGramModel from_arpa(const std::string& text);

private:
    NGramModel() = default;

    struct ContextStat {
        int64_t total = 0;   // sum of event counts after this context
        int32_t distinct = 0;  // number of distinct followers
        double backoff = 0.0;  // used only by ARPA-loaded models
    };

    using Key = std::string;  // packed int32 ids
    static Key pack(const int* ids, size_t n);

    double prob_ids(const int* context, size_t len, int event) const;

    Options options_;
    LmVocab vocab_;
    bool from_arpa_ = false;
    // per order (index k-1): k-gram -> count, and (k-1)-context -> stats
    std::vector<std::unordered_map<Key, int64_t>> gram_counts_;
    std::vector<std::unordered_map<Key, ContextStat>> context_stats_;
    std::vector<double> discounts_;
    int64_t unigram_total_ = 0;
    int64_t unigram_types_ = 0;
    // ARPA-loaded representation: k-gram -> log10 prob
    std::vector<std::unordered_map<Key, double>> arpa_probs_;
};

}  // namespace stylemt
