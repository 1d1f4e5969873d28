#pragma once

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stylemt/textproc.hpp"

namespace stylemt {

struct BpeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Subword model. Words are split into codepoint symbols followed by a
// separate end-of-word marker symbol; merges then fuse adjacent symbols in
// learned order. Protected tokens bypass segmentation entirely.
struct BpeModel {
    std::vector<std::pair<std::string, std::string>> merges;
    std::string marker = "</w>";
    std::set<std::string> protected_tokens = {kFormalTag, kInformalTag};

    // "#bpe v1 marker=..." header, then one space-separated pair per line.
    // The protected set is not stored; it is configuration, not data.
    std::string serialize() const;
    static BpeModel deserialize(const std::string& text);
};

struct BpeOptions {
    int64_t num_merges = 200;
    std::string marker = "</w>";
    std::set<std::string> protected_tokens = {kFormalTag, kInformalTag};
};

// Greedy most-frequent-pair learning over the word-frequency table of the
// corpus (tie: lexicographically smallest pair; stop early when the best
// pair occurs once). Non-protected tokens containing the marker substring
// are rejected. An empty corpus yields a model with zero merges.
BpeModel bpe_learn(const std::vector<TokenSeq>& corpus, const BpeOptions& options);

// Splits each non-protected token into codepoint symbols plus the marker
// symbol, then applies merges in order, each scanned left to right.
TokenSeq bpe_encode(const BpeModel& model, const TokenSeq& seq);

// Concatenates subwords, emitting a word at each marker-terminated subword.
// A trailing subword with no marker is emitted as-is; dangling (if non-null)
// counts such events so callers can warn.
TokenSeq bpe_decode(const BpeModel& model, const TokenSeq& seq, int64_t* dangling = nullptr);

}  // namespace stylemt
