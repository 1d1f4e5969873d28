#pragma once

#include <cstdint>
#include <vector>

#include "stylemt/ced_select.hpp"
#include "stylemt/textproc.hpp"

namespace stylemt {

// Deterministic synthetic corpora for demos and end-to-end checks. The
// "informal" register is all-lowercase with at least one contraction per
// sentence; the "formal" register expands every contraction and capitalizes
// the sentence start. The transforms are exact inverses on generated data.

struct FtPair {
    TokenSeq informal;
    TokenSeq formal;
};

TokenSeq formalize(const TokenSeq& informal);
TokenSeq informalize(const TokenSeq& formal);

// Style detectors for generated-task outputs. A sequence can be neither
// (malformed model output); it is never both.
bool is_formal_style(const TokenSeq& tokens);
bool is_informal_style(const TokenSeq& tokens);

// Letter-rotation word cipher (case-preserving, apostrophes kept): a stand-in
// "source language" with the same sentence structure as its English side.
TokenSeq cipher_tokens(const TokenSeq& tokens);

// count distinct informal sentences paired with their formal transforms.
std::vector<FtPair> synthetic_ft_pairs(int64_t count, uint64_t seed);

// Monolingual style corpus: formal or informal sides of fresh pairs.
std::vector<TokenSeq> synthetic_style_corpus(int64_t count, uint64_t seed, bool formal);

// Aligned cipher->English pairs, mixed half formal half informal, ids 1..count.
std::vector<BitextPair> synthetic_bitext(int64_t count, uint64_t seed);

}  // namespace stylemt
