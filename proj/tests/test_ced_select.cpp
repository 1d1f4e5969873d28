#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "stylemt/ced_select.hpp"
#include "stylemt/util/io.hpp"
#include "stylemt/util/rng.hpp"

using namespace stylemt;

namespace {

BitextPair mk(int64_t id, const std::string& src, const std::string& tgt) {
    return BitextPair{split_ws(src), split_ws(tgt), id};
}

std::vector<TokenSeq> corpus_of(const std::vector<std::string>& lines) {
    std::vector<TokenSeq> out;
    for (const auto& l : lines) out.push_back(split_ws(l));
    return out;
}

// Two smoothed LMs with different token preferences, plus a random bitext
// whose English sides mix both vocabularies.
struct Fixture {
    NGramModel formal;
    NGramModel informal;
    std::vector<BitextPair> bitext;
};

Fixture make_fixture(uint64_t seed, int pairs, int min_len = 3, int max_len = 8) {
    Rng rng(seed);
    std::vector<std::string> formal_vocab = {"a", "b", "a", "a", "b", "c"};
    std::vector<std::string> informal_vocab = {"c", "d", "d", "c", "d", "a"};
    auto gen_corpus = [&](const std::vector<std::string>& vocab) {
        std::vector<TokenSeq> corpus;
        for (int i = 0; i < 60; ++i) {
            TokenSeq s;
            size_t len = 2 + rng.below(6);
            for (size_t j = 0; j < len; ++j) s.push_back(vocab[rng.below(vocab.size())]);
            corpus.push_back(s);
        }
        return corpus;
    };
    Fixture f{
        NGramModel::train(gen_corpus(formal_vocab), {.order = 2, .min_count = 1}),
        NGramModel::train(gen_corpus(informal_vocab), {.order = 2, .min_count = 1}),
        {}};
    std::vector<std::string> all = {"a", "b", "c", "d"};
    for (int i = 0; i < pairs; ++i) {
        TokenSeq tgt;
        size_t len = min_len + rng.below(max_len - min_len + 1);
        for (size_t j = 0; j < len; ++j) tgt.push_back(all[rng.below(all.size())]);
        f.bitext.push_back(BitextPair{{"src" + std::to_string(i)}, tgt, i + 1});
    }
    return f;
}

// Score everything, sort, cut: the full-sort oracle.
std::vector<int64_t> oracle_select(const Fixture& f, int64_t n, Style style) {
    std::vector<std::pair<double, int64_t>> scored;
    for (const auto& p : f.bitext) {
        scored.push_back({ced_score(f.formal, f.informal, p, style).score, p.id});
    }
    std::sort(scored.begin(), scored.end());
    std::vector<int64_t> ids;
    for (size_t i = 0; i < std::min(static_cast<size_t>(n), scored.size()); ++i)
        ids.push_back(scored[i].second);
    return ids;
}

std::vector<int64_t> ids_of(const StyleSample& s) {
    std::vector<int64_t> ids;
    for (const auto& p : s.pairs) ids.push_back(p.id);
    return ids;
}

}  // namespace

TEST_CASE("identical models score zero everywhere and ties break by id") {
    Fixture f = make_fixture(1, 10);
    for (const auto& p : f.bitext) {
        CHECK(ced_score(f.formal, f.formal, p, Style::formal).score == 0.0);
    }
    StyleSample s = ced_rank_select(f.bitext, f.formal, f.formal, 3, Style::formal);
    CHECK(ids_of(s) == std::vector<int64_t>{1, 2, 3});
    CHECK(!s.truncated);
    CHECK(s.requested == 3);
}

TEST_CASE("exchanging style roles negates the score") {
    Fixture f = make_fixture(2, 25);
    for (const auto& p : f.bitext) {
        double fs = ced_score(f.formal, f.informal, p, Style::formal).score;
        double is = ced_score(f.formal, f.informal, p, Style::informal).score;
        CHECK(fs == -is);
    }
}

TEST_CASE("a formal-looking sentence scores negative for the formal target") {
    auto formal = NGramModel::train(corpus_of({"a a", "a b"}),
                                    {.order = 2, .min_count = 1, .mle = true});
    auto informal = NGramModel::train(corpus_of({"b b", "b a"}),
                                      {.order = 2, .min_count = 1, .mle = true});
    BitextPair p = mk(1, "x", "a a");
    CHECK(ced_score(formal, informal, p, Style::formal).score < 0.0);

    // smoothed variant stays strictly negative but finite
    auto formal_s = NGramModel::train(corpus_of({"a a", "a b"}), {.order = 2, .min_count = 1});
    auto informal_s =
        NGramModel::train(corpus_of({"b b", "b a"}), {.order = 2, .min_count = 1});
    double s = ced_score(formal_s, informal_s, p, Style::formal).score;
    CHECK(s < 0.0);
    CHECK(std::isfinite(s));
}

TEST_CASE("a doubly infinite difference is rejected") {
    auto formal = NGramModel::train(corpus_of({"a"}), {.order = 1, .min_count = 1, .mle = true});
    auto informal = NGramModel::train(corpus_of({"b"}), {.order = 1, .min_count = 1, .mle = true});
    BitextPair p = mk(7, "x", "c c");
    CHECK_THROWS_AS(ced_score(formal, informal, p, Style::formal), SelectError);
}

TEST_CASE("streaming selection equals the full-sort oracle") {
    for (uint64_t seed : {10, 11, 12, 13, 14, 15}) {
        Fixture f = make_fixture(seed, 50 + static_cast<int>(seed) * 37);
        for (int64_t n : {int64_t(1), int64_t(7), int64_t(50),
                          static_cast<int64_t>(f.bitext.size())}) {
            for (Style style : {Style::formal, Style::informal}) {
                StyleSample got = ced_rank_select(f.bitext, f.formal, f.informal, n, style);
                CHECK(ids_of(got) == oracle_select(f, n, style));
            }
        }
    }
}

TEST_CASE("selection is invariant to input order") {
    Fixture f = make_fixture(20, 80);
    auto want = ids_of(ced_rank_select(f.bitext, f.formal, f.informal, 10, Style::formal));
    Rng rng(3);
    auto shuffled = f.bitext;
    rng.shuffle(shuffled);
    auto got_ids =
        ids_of(ced_rank_select(shuffled, f.formal, f.informal, 10, Style::formal));
    CHECK(got_ids == want);
}

TEST_CASE("selected sample minimizes total CED over all same-size subsets") {
    Fixture f = make_fixture(30, 10);
    std::vector<double> score;
    for (const auto& p : f.bitext)
        score.push_back(ced_score(f.formal, f.informal, p, Style::formal).score);
    for (int n = 1; n <= 6; ++n) {
        StyleSample s = ced_rank_select(f.bitext, f.formal, f.informal, n, Style::formal);
        double got = 0.0;
        for (const auto& p : s.pairs) got += score[p.id - 1];
        // exhaustive minimum over all C(10, n) subsets
        std::vector<bool> pick(score.size(), false);
        std::fill(pick.begin(), pick.begin() + n, true);
        std::sort(pick.begin(), pick.end());  // arrange for next_permutation cycle
        double best = 1e18;
        do {
            double total = 0.0;
            for (size_t i = 0; i < pick.size(); ++i)
                if (pick[i]) total += score[i];
            best = std::min(best, total);
        } while (std::next_permutation(pick.begin(), pick.end()));
        CHECK(got == doctest::Approx(best).epsilon(1e-12));
    }
}

TEST_CASE("full-size formal and informal selections reverse each other") {
    Fixture f = make_fixture(40, 30);
    // distinct English sides so scores are pairwise distinct and the
    // reversal is exact
    f.bitext = dedup_by_target(f.bitext);
    int64_t n = static_cast<int64_t>(f.bitext.size());
    auto fw = ids_of(ced_rank_select(f.bitext, f.formal, f.informal, n, Style::formal));
    auto bw = ids_of(ced_rank_select(f.bitext, f.formal, f.informal, n, Style::informal));
    std::vector<double> scores;
    for (const auto& p : f.bitext)
        scores.push_back(ced_score(f.formal, f.informal, p, Style::formal).score);
    std::sort(scores.begin(), scores.end());
    REQUIRE(std::adjacent_find(scores.begin(), scores.end()) == scores.end());
    std::reverse(bw.begin(), bw.end());
    CHECK(fw == bw);
}

TEST_CASE("oversized requests return everything and flag truncation") {
    Fixture f = make_fixture(50, 5);
    StyleSample s = ced_rank_select(f.bitext, f.formal, f.informal, 99, Style::formal);
    CHECK(s.pairs.size() == 5);
    CHECK(s.truncated);
    CHECK(s.requested == 99);
    CHECK_THROWS_AS(ced_rank_select(f.bitext, f.formal, f.informal, 0, Style::formal),
                    SelectError);
    CHECK_THROWS_AS(
        ced_rank_select(f.bitext, f.formal, f.informal, 3, Style::random_sample),
        SelectError);
}

TEST_CASE("random_select reproduces from its seed") {
    Fixture f = make_fixture(60, 20);
    StyleSample a = random_select(f.bitext, 8, 123);
    StyleSample b = random_select(f.bitext, 8, 123);
    CHECK(ids_of(a) == ids_of(b));
    CHECK(a.style == Style::random_sample);
    CHECK(std::string(style_name(a.style)) == "random");
    StyleSample c = random_select(f.bitext, 8, 124);
    CHECK(ids_of(a) != ids_of(c));
}

TEST_CASE("random_select at full size permutes the whole pool") {
    Fixture f = make_fixture(70, 15);
    StyleSample s = random_select(f.bitext, 15, 9);
    auto ids = ids_of(s);
    auto sorted = ids;
    std::sort(sorted.begin(), sorted.end());
    std::vector<int64_t> want;
    for (const auto& p : f.bitext) want.push_back(p.id);
    CHECK(sorted == want);

    StyleSample t = random_select(f.bitext, 50, 9);
    CHECK(t.pairs.size() == 15);
    CHECK(t.truncated);
    CHECK_THROWS_AS(random_select(f.bitext, 0, 1), SelectError);
}

TEST_CASE("random_select draws uniformly") {
    std::vector<BitextPair> pool = {mk(1, "s", "a"), mk(2, "s", "b"), mk(3, "s", "c"),
                                    mk(4, "s", "d")};
    std::map<int64_t, int> freq;
    for (uint64_t seed = 0; seed < 10000; ++seed) {
        StyleSample s = random_select(pool, 1, seed);
        freq[s.pairs[0].id] += 1;
    }
    // binomial: mean 2500, sigma = sqrt(10000 * 1/4 * 3/4) ~ 43.3
    for (const auto& [id, count] : freq) {
        CHECK(std::abs(count - 2500) <= 4 * 43.3);
    }
    CHECK(freq.size() == 4);
}

TEST_CASE("dedup keeps the first pair per English side") {
    std::vector<BitextPair> pool = {mk(1, "x", "a b"), mk(2, "y", "a b"), mk(3, "z", "c"),
                                    mk(4, "w", "a b"), mk(5, "v", "c")};
    auto out = dedup_by_target(pool);
    REQUIRE(out.size() == 2);
    CHECK(out[0].id == 1);
    CHECK(out[1].id == 3);
    CHECK(out[0].src == TokenSeq{"x"});
}

TEST_CASE("bitext validation catches empty sides and duplicate ids") {
    std::vector<BitextPair> ok = {mk(1, "a", "b"), mk(2, "c", "d")};
    validate_bitext(ok);
    std::vector<BitextPair> empty_side = {mk(1, "a", "b"), BitextPair{{}, {"x"}, 2}};
    CHECK_THROWS_AS(validate_bitext(empty_side), SelectError);
    std::vector<BitextPair> dup = {mk(1, "a", "b"), mk(1, "c", "d")};
    CHECK_THROWS_AS(validate_bitext(dup), SelectError);
}
