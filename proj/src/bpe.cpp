#include "stylemt/bpe.hpp"

#include <algorithm>
#include <map>

#include "stylemt/util/io.hpp"
#include "stylemt/util/utf8.hpp"

namespace stylemt {

namespace {

using SymPair = std::pair<std::string, std::string>;

std::vector<std::string> split_symbols(const std::string& token, const std::string& marker) {
    std::vector<std::string> symbols;
    for (char32_t cp : utf8_decode(token)) {
        std::string s;
        utf8_append(s, cp);
        symbols.push_back(std::move(s));
    }
    symbols.push_back(marker);
    return symbols;
}

void check_marker_free(const std::string& token, const BpeOptions& options) {
    if (options.protected_tokens.count(token)) return;
    if (token.find(options.marker) != std::string::npos)
        throw BpeError("token contains the end-of-word marker: " + token);
}

// Merges every adjacent (a, b) left to right, in place.
void apply_merge(std::vector<std::string>& symbols, const SymPair& pair) {
    size_t w = 0;
    for (size_t r = 0; r < symbols.size(); ++r) {
        if (r + 1 < symbols.size() && symbols[r] == pair.first &&
            symbols[r + 1] == pair.second) {
            symbols[w++] = pair.first + pair.second;
            ++r;
        } else {
            if (w != r) symbols[w] = std::move(symbols[r]);
            ++w;
        }
    }
    symbols.resize(w);
}

}  // namespace

BpeModel bpe_learn(const std::vector<TokenSeq>& corpus, const BpeOptions& options) {
    if (options.num_merges < 0) throw BpeError("num_merges must be >= 0");
    if (options.marker.empty()) throw BpeError("marker must be non-empty");

    std::map<std::string, int64_t> word_freq;
    for (const auto& seq : corpus) {
        for (const auto& token : seq) {
            if (options.protected_tokens.count(token)) continue;
            check_marker_free(token, options);
            word_freq[token] += 1;
        }
    }

    struct Word {
        std::vector<std::string> symbols;
        int64_t freq;
    };
    std::vector<Word> words;
    words.reserve(word_freq.size());
    for (const auto& [token, freq] : word_freq)
        words.push_back({split_symbols(token, options.marker), freq});

    // counts and membership index, kept in lockstep with segmentations
    std::map<SymPair, int64_t> pair_counts;
    std::map<SymPair, std::set<size_t>> members;
    auto count_word = [&](size_t wi, int64_t sign) {
        const Word& w = words[wi];
        for (size_t i = 0; i + 1 < w.symbols.size(); ++i) {
            SymPair p{w.symbols[i], w.symbols[i + 1]};
            pair_counts[p] += sign * w.freq;
            if (sign > 0) {
                members[p].insert(wi);
            }
        }
    };
    for (size_t wi = 0; wi < words.size(); ++wi) count_word(wi, +1);

    BpeModel model;
    model.marker = options.marker;
    model.protected_tokens = options.protected_tokens;

    for (int64_t step = 0; step < options.num_merges; ++step) {
        // lexicographically first among the most frequent (map is ordered)
        const SymPair* best = nullptr;
        int64_t best_count = 0;
        for (const auto& [pair, count] : pair_counts) {
            if (count > best_count) {
                best_count = count;
                best = &pair;
            }
        }
        if (best_count < 2) break;
        SymPair merge = *best;
        model.merges.push_back(merge);

        std::set<size_t> touched = members[merge];
        for (size_t wi : touched) {
            // retract this word's pairs, re-segment, re-add
            const Word& w = words[wi];
            for (size_t i = 0; i + 1 < w.symbols.size(); ++i) {
                SymPair p{w.symbols[i], w.symbols[i + 1]};
                pair_counts[p] -= w.freq;
                members[p].erase(wi);
            }
            apply_merge(words[wi].symbols, merge);
            count_word(wi, +1);
        }
        for (auto it = pair_counts.begin(); it != pair_counts.end();) {
            it = it->second == 0 ? pair_counts.erase(it) : std::next(it);
        }
    }
    return model;
}

TokenSeq bpe_encode(const BpeModel& model, const TokenSeq& seq) {
    TokenSeq out;
    for (const auto& token : seq) {
        if (model.protected_tokens.count(token)) {
            out.push_back(token);
            continue;
        }
        if (token.find(model.marker) != std::string::npos)
            throw BpeError("token contains the end-of-word marker: " + token);
        std::vector<std::string> symbols = split_symbols(token, model.marker);
        for (const auto& merge : model.merges) apply_merge(symbols, merge);
        for (auto& s : symbols) out.push_back(std::move(s));
    }
    return out;
}

TokenSeq bpe_decode(const BpeModel& model, const TokenSeq& seq, int64_t* dangling) {
    TokenSeq out;
    std::string word;
    int64_t warn = 0;
    auto flush_dangling = [&] {
        if (!word.empty()) {
            out.push_back(word);
            word.clear();
            ++warn;
        }
    };
    for (const auto& sub : seq) {
        if (model.protected_tokens.count(sub)) {
            flush_dangling();
            out.push_back(sub);
            continue;
        }
        if (sub.size() >= model.marker.size() &&
            sub.compare(sub.size() - model.marker.size(), model.marker.size(),
                        model.marker) == 0) {
            word += sub.substr(0, sub.size() - model.marker.size());
            if (!word.empty()) out.push_back(word);
            word.clear();
        } else {
            word += sub;
        }
    }
    flush_dangling();
    if (dangling) *dangling = warn;
    return out;
}

std::string BpeModel::serialize() const {
    std::string out = "#bpe v1 marker=" + marker + "\n";
    for (const auto& [a, b] : merges) {
        out += a;
        out += ' ';
        out += b;
        out += '\n';
    }
    return out;
}

BpeModel BpeModel::deserialize(const std::string& text) {
    auto lines = split_on(text, '\n');
    if (lines.empty() || lines[0].rfind("#bpe v1 marker=", 0) != 0)
        throw BpeError("bad BPE model header");
    BpeModel model;
    model.marker = lines[0].substr(std::string("#bpe v1 marker=").size());
    if (model.marker.empty()) throw BpeError("bad BPE model header: empty marker");
    for (size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        auto fields = split_on(lines[i], ' ');
        if (fields.size() != 2 || fields[0].empty() || fields[1].empty())
            throw BpeError("bad merge line: " + lines[i]);
        model.merges.push_back({fields[0], fields[1]});
    }
    return model;
}

}  // namespace stylemt
