#pragma once

#include <cstdint>
#include <vector>

#include "stylemt/beam.hpp"
#include "stylemt/seq2seq.hpp"

namespace stylemt {

struct DecodeConfig {
    int64_t beam = 5;
    // linear ensemble: arithmetic mean of member softmax distributions;
    // the alternative averages log-probabilities instead
    bool log_space_ensemble = false;
    // hypotheses may grow to 2*source_len + max_len_slack tokens
    int64_t max_len_slack = 10;
};

// Ensemble beam decode of one emitted source (tag included if any). All
// models must share the vocabulary; empty source decodes from the start
// context alone. Deterministic.
BeamHyp decode_sentence(const std::vector<Seq2SeqParams>& models, const TokenSeq& src,
                        const DecodeConfig& config);

TokenSeq beam_decode(const std::vector<Seq2SeqParams>& models, const TokenSeq& src,
                     int64_t beam);

// Total negative log-likelihood (nats) of tgt + </s> given src, computed on
// the incremental decode path; cross-checks the training-graph loss.
double force_decode_nll(const Seq2SeqParams& model, const TokenSeq& src,
                        const TokenSeq& tgt);

// Next-token log-probability distributions for each prefix of tgt, ensembled
// per config; column t conditions on tgt[0..t).
Eigen::MatrixXd step_distributions(const std::vector<Seq2SeqParams>& models,
                                   const TokenSeq& src, const TokenSeq& tgt,
                                   const DecodeConfig& config);

}  // namespace stylemt
