#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "stylemt/textproc.hpp"

namespace stylemt {

class EvalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Metric-internal tokenization (multi-bleu-detok convention): punctuation
// separated, case preserved, digit-internal periods/commas kept.
TokenSeq wmt_tokenize(const std::string& line);

// Additive sufficient statistics for corpus BLEU.
struct BleuStats {
    std::array<int64_t, 4> correct{};  // clipped n-gram matches, n = 1..4
    std::array<int64_t, 4> total{};    // hypothesis n-gram counts
    int64_t hyp_len = 0;
    int64_t ref_len = 0;  // closest reference length, ties broken shorter

    BleuStats& operator+=(const BleuStats& other);
};

struct BleuReport {
    double bleu = 0.0;  // in [0, 100]
    std::array<double, 4> precisions{};
    double brevity_penalty = 0.0;
    int64_t hyp_len = 0;
    int64_t ref_len = 0;
};

struct EvalSet {
    std::vector<std::string> hypotheses;
    std::vector<std::vector<std::string>> references;  // >= 1 per hypothesis
};

// Clipped n-gram statistics for one tokenized hypothesis against its
// references (multi-reference clipping takes the max count per n-gram).
BleuStats sentence_stats(const TokenSeq& hyp, const std::vector<TokenSeq>& refs);

// Unsmoothed corpus BLEU from summed statistics; any zero precision gives 0.
BleuReport bleu_from_stats(const BleuStats& stats);

std::vector<BleuStats> per_sentence_stats(const EvalSet& set);
BleuReport bleu(const EvalSet& set);

// Paired bootstrap resampling (Koehn). Returns p for "A beats B": the
// fraction of resamples where A does not strictly beat B.
double bootstrap(const std::vector<std::string>& sys_a,
                 const std::vector<std::string>& sys_b,
                 const std::vector<std::vector<std::string>>& references,
                 int64_t n_samples, uint64_t seed);

struct TTestResult {
    double t = 0.0;
    int64_t df = 0;
    double p_value = 1.0;
    bool degenerate = false;  // zero-variance differences
};

// Two-sided paired t-test. Zero-variance conventions: all-zero differences
// give p = 1, constant nonzero differences give p = 0 (degenerate flag set).
TTestResult paired_ttest(const std::vector<double>& scores_a,
                         const std::vector<double>& scores_b);

}  // namespace stylemt
