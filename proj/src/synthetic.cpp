#include "stylemt/synthetic.hpp"

#include <algorithm>
#include <set>
#include <utility>

#include "stylemt/util/io.hpp"
#include "stylemt/util/rng.hpp"

namespace stylemt {

namespace {

// contraction -> two-token expansion; expansions are unique bigrams and no
// expansion word appears in the filler lexicon, so the transforms invert
const std::vector<std::pair<std::string, std::pair<std::string, std::string>>> kContractions = {
    {"aren't", {"are", "not"}},   {"can't", {"can", "not"}},
    {"didn't", {"did", "not"}},   {"don't", {"do", "not"}},
    {"i'm", {"i", "am"}},         {"isn't", {"is", "not"}},
    {"it's", {"it", "is"}},       {"they're", {"they", "are"}},
    {"we're", {"we", "are"}},     {"won't", {"will", "not"}},
    {"you're", {"you", "are"}},
};

const std::vector<std::string> kFillers = {
    "about",  "busy",   "coffee", "early",  "friend", "game",   "garden", "happy",
    "here",   "home",   "hungry", "late",   "lucky",  "movie",  "music",  "noisy",
    "outside", "pizza", "quiet",  "rain",   "ready",  "river",  "slow",   "small",
    "street", "sunny",  "there",  "tired",  "today",  "warm",   "weather", "window",
};

const std::pair<std::string, std::string>* expansion_of(const std::string& token) {
    for (const auto& [contraction, expansion] : kContractions)
        if (token == contraction) return &expansion;
    return nullptr;
}

const std::string* contraction_of(const std::string& a, const std::string& b) {
    for (const auto& [contraction, expansion] : kContractions)
        if (a == expansion.first && b == expansion.second) return &contraction;
    return nullptr;
}

std::string capitalize(std::string token) {
    if (!token.empty() && token[0] >= 'a' && token[0] <= 'z')
        token[0] = static_cast<char>(token[0] - 'a' + 'A');
    return token;
}

std::string decapitalize(std::string token) {
    if (!token.empty() && token[0] >= 'A' && token[0] <= 'Z')
        token[0] = static_cast<char>(token[0] - 'A' + 'a');
    return token;
}

bool has_contraction(const TokenSeq& tokens) {
    for (const auto& t : tokens)
        if (t.find('\'') != std::string::npos) return true;
    return false;
}

TokenSeq informal_sentence(Rng& rng) {
    // filler* contraction filler* with 3..6 tokens, sometimes two contractions
    int64_t len = 3 + static_cast<int64_t>(rng.below(4));
    int64_t contractions = rng.below(5) == 0 ? 2 : 1;
    std::vector<int64_t> slots(static_cast<size_t>(len));
    for (int64_t i = 0; i < len; ++i) slots[static_cast<size_t>(i)] = i;
    Rng slot_rng(rng.next_u64());
    slot_rng.shuffle(slots);

    TokenSeq out(static_cast<size_t>(len));
    std::set<int64_t> contraction_at(slots.begin(),
                                     slots.begin() + std::min<int64_t>(contractions, len));
    for (int64_t i = 0; i < len; ++i) {
        if (contraction_at.count(i)) {
            out[static_cast<size_t>(i)] =
                kContractions[rng.below(kContractions.size())].first;
        } else {
            out[static_cast<size_t>(i)] = kFillers[rng.below(kFillers.size())];
        }
    }
    return out;
}

}  // namespace

TokenSeq formalize(const TokenSeq& informal) {
    TokenSeq out;
    out.reserve(informal.size() + 2);
    for (const auto& token : informal) {
        if (const auto* expansion = expansion_of(token)) {
            out.push_back(expansion->first);
            out.push_back(expansion->second);
        } else {
            out.push_back(token);
        }
    }
    if (!out.empty()) out[0] = capitalize(out[0]);
    return out;
}

TokenSeq informalize(const TokenSeq& formal) {
    TokenSeq lowered = formal;
    if (!lowered.empty()) lowered[0] = decapitalize(lowered[0]);
    TokenSeq out;
    out.reserve(lowered.size());
    for (size_t i = 0; i < lowered.size(); ++i) {
        if (i + 1 < lowered.size()) {
            if (const auto* contraction = contraction_of(lowered[i], lowered[i + 1])) {
                out.push_back(*contraction);
                ++i;
                continue;
            }
        }
        out.push_back(lowered[i]);
    }
    return out;
}

bool is_formal_style(const TokenSeq& tokens) {
    if (tokens.empty()) return false;
    if (tokens[0].empty() || tokens[0][0] < 'A' || tokens[0][0] > 'Z') return false;
    return !has_contraction(tokens);
}

bool is_informal_style(const TokenSeq& tokens) {
    if (tokens.empty()) return false;
    if (tokens[0].empty() || tokens[0][0] < 'a' || tokens[0][0] > 'z') return false;
    return has_contraction(tokens);
}

TokenSeq cipher_tokens(const TokenSeq& tokens) {
    TokenSeq out;
    out.reserve(tokens.size());
    for (const auto& token : tokens) {
        std::string mapped = token;
        for (char& c : mapped) {
            if (c >= 'a' && c <= 'z') c = static_cast<char>((c - 'a' + 13) % 26 + 'a');
            else if (c >= 'A' && c <= 'Z') c = static_cast<char>((c - 'A' + 13) % 26 + 'A');
        }
        out.push_back(std::move(mapped));
    }
    return out;
}

std::vector<FtPair> synthetic_ft_pairs(int64_t count, uint64_t seed) {
    Rng rng(derive_seed(seed, "synthetic.ft"));
    std::vector<FtPair> out;
    std::set<std::string> seen;
    int64_t attempts = 0;
    while (static_cast<int64_t>(out.size()) < count) {
        if (++attempts > count * 200) throw TextprocError("synthetic pair space exhausted");
        TokenSeq informal = informal_sentence(rng);
        if (!seen.insert(join(informal, " ")).second) continue;
        out.push_back({informal, formalize(informal)});
    }
    return out;
}

std::vector<TokenSeq> synthetic_style_corpus(int64_t count, uint64_t seed, bool formal) {
    Rng rng(derive_seed(seed, formal ? "synthetic.formal" : "synthetic.informal"));
    std::vector<TokenSeq> out;
    out.reserve(static_cast<size_t>(count));
    for (int64_t i = 0; i < count; ++i) {
        TokenSeq informal = informal_sentence(rng);
        out.push_back(formal ? formalize(informal) : std::move(informal));
    }
    return out;
}

std::vector<BitextPair> synthetic_bitext(int64_t count, uint64_t seed) {
    Rng rng(derive_seed(seed, "synthetic.bitext"));
    std::vector<BitextPair> out;
    out.reserve(static_cast<size_t>(count));
    for (int64_t i = 0; i < count; ++i) {
        TokenSeq english = informal_sentence(rng);
        if (i % 2 == 0) english = formalize(english);
        BitextPair pair;
        pair.tgt = english;
        pair.src = cipher_tokens(english);
        pair.id = i + 1;
        out.push_back(std::move(pair));
    }
    return out;
}

}  // namespace stylemt
