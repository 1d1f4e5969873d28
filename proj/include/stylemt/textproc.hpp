#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace stylemt {

// One input sentence. line_no is 1-based and only used for error reporting.
struct RawLine {
    std::string text;
    int64_t line_no = 0;
};

using TokenSeq = std::vector<std::string>;

struct TextprocError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Style tag surface forms, reserved throughout the pipeline.
inline constexpr const char* kFormalTag = "<F>";
inline constexpr const char* kInformalTag = "<I>";

bool is_style_tag(const std::string& token);

// Punctuation normalization. Fixed mapping table:
//   curly double quotes  U+201C U+201D U+201E U+00AB U+00BB  -> "
//   curly single quotes  U+2018 U+2019 U+201A U+2039 U+203A  -> '
//   dashes               U+2012 U+2013 U+2015                -> -
//   em dash              U+2014                              -> " - "
//   ellipsis             U+2026                              -> ...
//   no-break space       U+00A0                              -> space
// Whitespace runs collapse to a single space; leading/trailing whitespace is
// stripped. Idempotent. Throws TextprocError naming line_no on invalid UTF-8.
RawLine normalize(const RawLine& line);

// Whitespace chunks are processed independently; a chunk equal to a style tag
// is kept atomic. Within a chunk:
//   - runs of letters/digits (any codepoint >= U+0080 counts as a letter)
//     form token cores
//   - '.' ',' ':' between two digits stay attached (numbers)
//   - '-' between two alphanumerics stays attached (hyphen splitting off)
//   - '\'' followed by a letter starts a new token that includes the
//     apostrophe (contraction convention: "don't" -> "don 't")
//   - a run of '.' forms one token ("..." stays together)
//   - every other punctuation codepoint is a single-character token
// Joining the output with single spaces re-tokenizes to the same sequence.
TokenSeq tokenize(const RawLine& line);

// Inverse of tokenize for presentation: joins tokens, reattaching
// left-binding punctuation (.,!?;:%) and apostrophe-initial tokens, and
// gluing right-binding openers (([{ and opening quotes by pairing).
std::string detokenize(const TokenSeq& tokens);

class TruecaseModel {
public:
    // Most frequent non-sentence-initial surface form per lowercased key;
    // ties go to the lexicographically smallest surface. Counts are kept for
    // serialization and merging.
    struct Entry {
        std::string surface;
        int64_t count = 0;
    };

    const std::map<std::string, Entry>& table() const { return table_; }

    // Returns the canonical surface for a lowercased key, or empty if unseen.
    std::string lookup(const std::string& lowercased) const;

    void observe(const std::string& surface, int64_t count);

    std::string serialize() const;  // "surface<TAB>count" per line, sorted by key
    static TruecaseModel deserialize(const std::string& text);

    bool same_mapping(const TruecaseModel& other) const;

private:
    std::map<std::string, Entry> table_;
};

// Counts non-sentence-initial surface forms. The first token of every line is
// excluded; style tags are never counted.
TruecaseModel truecase_train(const std::vector<TokenSeq>& corpus);

// Recases at most the first token: table entry if its lowercase is known,
// lowercased otherwise. A leading style tag leaves the sequence untouched.
TokenSeq truecase_apply(const TruecaseModel& model, const TokenSeq& seq);

// Inverse for model output: uppercases the first letter of the first token.
TokenSeq detruecase(const TokenSeq& seq);

// Lowercasing used by the truecaser (ASCII A-Z plus the Latin-1 uppercase
// range; other codepoints unchanged).
std::string lowercase(const std::string& token);

}  // namespace stylemt
