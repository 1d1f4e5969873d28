#include "doctest.h"

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "stylemt/bpe.hpp"
#include "stylemt/util/io.hpp"
#include "stylemt/util/rng.hpp"
#include "stylemt/util/utf8.hpp"

using namespace stylemt;

namespace {

using SymPair = std::pair<std::string, std::string>;

// Full-rescan reference learner: recounts every pair from every word after
// each merge. Shares no code with the implementation under test.
std::vector<SymPair> oracle_learn(const std::vector<TokenSeq>& corpus,
                                  const BpeOptions& options) {
    std::map<std::string, int64_t> freq;
    for (const auto& seq : corpus)
        for (const auto& tok : seq)
            if (!options.protected_tokens.count(tok)) freq[tok] += 1;

    std::vector<std::pair<std::vector<std::string>, int64_t>> words;
    for (const auto& [tok, f] : freq) {
        std::vector<std::string> syms;
        for (char32_t cp : utf8_decode(tok)) {
            std::string s;
            utf8_append(s, cp);
            syms.push_back(s);
        }
        syms.push_back(options.marker);
        words.push_back({syms, f});
    }

    std::vector<SymPair> merges;
    for (int64_t step = 0; step < options.num_merges; ++step) {
        std::map<SymPair, int64_t> counts;
        for (const auto& [syms, f] : words)
            for (size_t i = 0; i + 1 < syms.size(); ++i)
                counts[{syms[i], syms[i + 1]}] += f;
        SymPair best;
        int64_t best_count = 0;
        for (const auto& [p, c] : counts) {
            if (c > best_count) {
                best = p;
                best_count = c;
            }
        }
        if (best_count < 2) break;
        merges.push_back(best);
        for (auto& [syms, f] : words) {
            std::vector<std::string> next;
            for (size_t i = 0; i < syms.size(); ++i) {
                if (i + 1 < syms.size() && syms[i] == best.first &&
                    syms[i + 1] == best.second) {
                    next.push_back(best.first + best.second);
                    ++i;
                } else {
                    next.push_back(syms[i]);
                }
            }
            syms = next;
        }
    }
    return merges;
}

std::vector<TokenSeq> lines(const std::vector<std::string>& ls) {
    std::vector<TokenSeq> out;
    for (const auto& l : ls) out.push_back(split_ws(l));
    return out;
}

std::vector<TokenSeq> random_corpus(Rng& rng, int n_lines, int max_len) {
    const std::vector<std::string> alphabet = {"a", "b", "c", "d", "e",
                                               "1", "é", "火"};
    std::vector<TokenSeq> corpus;
    for (int i = 0; i < n_lines; ++i) {
        TokenSeq seq;
        size_t len = 1 + rng.below(max_len);
        for (size_t j = 0; j < len; ++j) {
            if (rng.below(12) == 0) {
                seq.push_back(rng.below(2) ? kFormalTag : kInformalTag);
                continue;
            }
            std::string tok;
            size_t chars = 1 + rng.below(6);
            for (size_t k = 0; k < chars; ++k) tok += alphabet[rng.below(alphabet.size())];
            seq.push_back(tok);
        }
        corpus.push_back(seq);
    }
    return corpus;
}

}  // namespace

TEST_CASE("pair frequency tie breaks lexicographically") {
    auto corpus = lines({"low low lower"});
    BpeOptions opt;
    opt.marker = "_";
    opt.num_merges = 1;
    BpeModel m = bpe_learn(corpus, opt);
    REQUIRE(m.merges.size() == 1);
    CHECK(m.merges[0] == SymPair{"l", "o"});  // (l,o) and (o,w) both occur 3 times

    opt.num_merges = 50;
    m = bpe_learn(corpus, opt);
    // early stop: after three merges no pair occurs twice
    std::vector<SymPair> want = {{"l", "o"}, {"lo", "w"}, {"low", "_"}};
    CHECK(m.merges == want);
}

TEST_CASE("zero merges yields a character model") {
    BpeOptions opt;
    opt.num_merges = 0;
    BpeModel m = bpe_learn(lines({"ab"}), opt);
    CHECK(m.merges.empty());
    CHECK(bpe_encode(m, {"ab"}) == TokenSeq{"a", "b", "</w>"});

    opt.marker = "_";
    m = bpe_learn(lines({"ab"}), opt);
    CHECK(bpe_encode(m, {"ab"}) == TokenSeq{"a", "b", "_"});

    BpeModel empty = bpe_learn({}, BpeOptions{});
    CHECK(empty.merges.empty());
}

TEST_CASE("fully merged training word encodes to token plus marker") {
    auto corpus = lines({"low low low low low"});
    BpeOptions opt;
    opt.num_merges = 10;
    BpeModel m = bpe_learn(corpus, opt);
    CHECK(bpe_encode(m, {"low"}) == TokenSeq{"low</w>"});
}

TEST_CASE("protected tokens pass through and join no merge") {
    Rng rng(1);
    auto corpus = random_corpus(rng, 80, 8);
    BpeOptions opt;
    opt.num_merges = 40;
    BpeModel m = bpe_learn(corpus, opt);
    CHECK(bpe_encode(m, {kFormalTag}) == TokenSeq{kFormalTag});
    CHECK(bpe_encode(m, {kInformalTag, "ab"}).front() == kInformalTag);
    for (const auto& [a, b] : m.merges) {
        CHECK(a != kFormalTag);
        CHECK(b != kFormalTag);
        CHECK(a != kInformalTag);
        CHECK(b != kInformalTag);
    }
}

TEST_CASE("learned merges equal the full-rescan oracle") {
    Rng rng(2024);
    // ~2,000-word corpus, 50 merges
    auto corpus = random_corpus(rng, 250, 8);
    BpeOptions opt;
    opt.num_merges = 50;
    BpeModel m = bpe_learn(corpus, opt);
    CHECK(m.merges == oracle_learn(corpus, opt));

    for (uint64_t seed : {7, 8, 9}) {
        Rng r2(seed);
        auto small = random_corpus(r2, 40, 6);
        BpeOptions o2;
        o2.num_merges = 30;
        CHECK(bpe_learn(small, o2).merges == oracle_learn(small, o2));
    }
}

TEST_CASE("merges are unique") {
    Rng rng(5);
    auto corpus = random_corpus(rng, 150, 8);
    BpeOptions opt;
    opt.num_merges = 120;
    BpeModel m = bpe_learn(corpus, opt);
    std::set<SymPair> distinct(m.merges.begin(), m.merges.end());
    CHECK(distinct.size() == m.merges.size());
}

TEST_CASE("learning ignores corpus line order") {
    Rng rng(6);
    auto corpus = random_corpus(rng, 100, 8);
    BpeOptions opt;
    opt.num_merges = 60;
    auto want = bpe_learn(corpus, opt).merges;
    Rng shuffler(7);
    shuffler.shuffle(corpus);
    CHECK(bpe_learn(corpus, opt).merges == want);
}

TEST_CASE("decode inverts encode") {
    Rng rng(8);
    auto corpus = random_corpus(rng, 120, 8);
    BpeOptions opt;
    opt.num_merges = 80;
    BpeModel m = bpe_learn(corpus, opt);

    for (int trial = 0; trial < 2000; ++trial) {
        auto probe = random_corpus(rng, 1, 10)[0];
        int64_t dangling = 0;
        TokenSeq enc = bpe_encode(m, probe);
        TokenSeq dec = bpe_decode(m, enc, &dangling);
        CHECK(dec == probe);
        CHECK(dangling == 0);
    }
    CHECK(bpe_decode(m, {}) == TokenSeq{});
}

TEST_CASE("dangling subwords decode as-is and are counted") {
    BpeModel m;
    int64_t dangling = 0;
    CHECK(bpe_decode(m, {"lo"}, &dangling) == TokenSeq{"lo"});
    CHECK(dangling == 1);
    CHECK(bpe_decode(m, {"lo", "w</w>", "x"}, &dangling) == TokenSeq{"low", "x"});
    CHECK(dangling == 1);
    CHECK(bpe_decode(m, {"lo", "<F>", "w</w>"}, &dangling) == TokenSeq{"lo", "<F>", "w"});
    CHECK(dangling == 1);
    CHECK(bpe_decode(m, {"a</w>", "b</w>"}, &dangling) == TokenSeq{"a", "b"});
    CHECK(dangling == 0);
}

TEST_CASE("raw text containing the marker is rejected") {
    BpeOptions opt;
    CHECK_THROWS_AS(bpe_learn(lines({"bad</w>token"}), opt), BpeError);
    BpeModel m = bpe_learn(lines({"ok text"}), opt);
    CHECK_THROWS_AS(bpe_encode(m, {"bad</w>token"}), BpeError);
    // protected tokens are exempt from the marker scan
    BpeOptions weird;
    weird.marker = "F";
    weird.num_merges = 0;
    CHECK_THROWS_AS(bpe_learn(lines({"fF"}), weird), BpeError);
    BpeModel w = bpe_learn(lines({"ok"}), weird);
    CHECK(bpe_encode(w, {kFormalTag}) == TokenSeq{kFormalTag});
}

TEST_CASE("encoded vocabulary is bounded by chars plus merges plus protected") {
    Rng rng(9);
    auto corpus = random_corpus(rng, 150, 8);
    BpeOptions opt;
    opt.num_merges = 70;
    BpeModel m = bpe_learn(corpus, opt);

    std::set<std::string> subwords;
    std::set<std::string> chars;
    std::set<std::string> protected_seen;
    for (const auto& seq : corpus) {
        for (const auto& sub : bpe_encode(m, seq)) subwords.insert(sub);
        for (const auto& tok : seq) {
            if (m.protected_tokens.count(tok)) {
                protected_seen.insert(tok);
                continue;
            }
            for (char32_t cp : utf8_decode(tok)) {
                std::string s;
                utf8_append(s, cp);
                chars.insert(s);
            }
        }
    }
    CHECK(subwords.size() <=
          chars.size() + 1 + m.merges.size() + protected_seen.size());  // +1: marker
}

TEST_CASE("model files round-trip") {
    Rng rng(10);
    auto corpus = random_corpus(rng, 60, 8);
    BpeOptions opt;
    opt.num_merges = 25;
    BpeModel m = bpe_learn(corpus, opt);
    std::string text = m.serialize();
    CHECK(text.rfind("#bpe v1 marker=</w>\n", 0) == 0);
    BpeModel back = BpeModel::deserialize(text);
    CHECK(back.marker == m.marker);
    CHECK(back.merges == m.merges);
    auto probe = random_corpus(rng, 1, 10)[0];
    CHECK(bpe_encode(back, probe) == bpe_encode(m, probe));

    CHECK_THROWS_AS(BpeModel::deserialize("no header\na b\n"), BpeError);
    CHECK_THROWS_AS(BpeModel::deserialize("#bpe v1 marker=x\nonly-one-field\n"), BpeError);
    CHECK_THROWS_AS(BpeModel::deserialize("#bpe v1 marker=\na b\n"), BpeError);
}

TEST_CASE("learn rejects bad options") {
    BpeOptions opt;
    opt.num_merges = -1;
    CHECK_THROWS_AS(bpe_learn({}, opt), BpeError);
    BpeOptions no_marker;
    no_marker.marker = "";
    CHECK_THROWS_AS(bpe_learn({}, no_marker), BpeError);
}
