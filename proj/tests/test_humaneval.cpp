#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "stylemt/humaneval.hpp"
#include "stylemt/util/io.hpp"
#include "stylemt/util/rng.hpp"

using namespace stylemt;

namespace {

std::string data_path(const std::string& name) {
    return std::string(STYLEMT_TEST_DATA_DIR) + "/" + name;
}

Judgment make(const std::string& item, Criterion c, int score, double trust,
              bool swapped = false) {
    return {item, c, score, trust, swapped};
}

std::vector<Judgment> random_group(Rng& rng, Criterion c, size_t count) {
    std::vector<Judgment> out;
    const int lo = c == Criterion::meaning ? 0 : -2;
    const int hi = c == Criterion::meaning ? 3 : 2;
    for (size_t i = 0; i < count; ++i) {
        int score = lo + static_cast<int>(rng.below(hi - lo + 1));
        double trust = 0.05 + 0.95 * rng.real01();
        out.push_back(make("item", c, score, trust));
    }
    return out;
}

}  // namespace

TEST_CASE("reorientation flips directional scores and is an involution") {
    auto j = make("x", Criterion::formality, 1, 0.9, true);
    auto r = reorient(j);
    CHECK(r.score == -1);
    CHECK(!r.swapped);

    auto zero = reorient(make("x", Criterion::fluency, 0, 0.9, true));
    CHECK(zero.score == 0);
    CHECK(!zero.swapped);

    // re-swapping and reorienting again restores the original
    auto back = r;
    back.swapped = true;
    auto restored = reorient(back);
    CHECK(restored.score == j.score);
    CHECK(!restored.swapped);

    auto meaning = reorient(make("x", Criterion::meaning, 2, 0.9, true));
    CHECK(meaning.score == 2);  // symmetric scale
    CHECK(!meaning.swapped);

    auto untouched = reorient(make("x", Criterion::formality, -2, 0.9, false));
    CHECK(untouched.score == -2);
}

TEST_CASE("worked trust-weighted example gives 1.12") {
    std::vector<Judgment> group = {make("a", Criterion::formality, 2, 1.0),
                                   make("a", Criterion::formality, 1, 0.8),
                                   make("a", Criterion::formality, 0, 0.7)};
    auto agg = aggregate(group, 0.0);
    CHECK(agg.value == doctest::Approx(1.12).epsilon(1e-12));
    CHECK(agg.n_used == 3);
    CHECK(agg.item_id == "a");
}

TEST_CASE("equal trusts reduce to the arithmetic mean") {
    std::vector<Judgment> group = {make("a", Criterion::fluency, 2, 0.8),
                                   make("a", Criterion::fluency, -1, 0.8),
                                   make("a", Criterion::fluency, 1, 0.8)};
    CHECK(aggregate(group, 0.0).value == doctest::Approx(2.0 / 3).epsilon(1e-12));
}

TEST_CASE("single surviving judgment is returned exactly") {
    std::vector<Judgment> group = {make("a", Criterion::meaning, 3, 0.71)};
    auto agg = aggregate(group);
    CHECK(agg.value == 3.0);
    CHECK(agg.n_used == 1);
}

TEST_CASE("trust floor drops low-trust judgments") {
    std::vector<Judgment> group = {make("a", Criterion::formality, 2, 1.0),
                                   make("a", Criterion::formality, 1, 0.8),
                                   make("a", Criterion::formality, 0, 0.7)};
    auto agg = aggregate(group);  // default floor 0.7 drops the last
    CHECK(agg.n_used == 2);
    CHECK(agg.value == doctest::Approx(2.8 / 1.8).epsilon(1e-12));

    try {
        aggregate(group, 1.0);
        FAIL("expected HumanEvalError");
    } catch (const HumanEvalError& e) {
        CHECK(std::string(e.what()).find("a") != std::string::npos);
        CHECK(std::string(e.what()).find("trust floor") != std::string::npos);
    }
}

TEST_CASE("aggregate rejects mixed or unoriented groups") {
    std::vector<Judgment> mixed = {make("a", Criterion::formality, 1, 0.9),
                                   make("b", Criterion::formality, 1, 0.9)};
    CHECK_THROWS_AS(aggregate(mixed, 0.0), HumanEvalError);

    std::vector<Judgment> criteria = {make("a", Criterion::formality, 1, 0.9),
                                      make("a", Criterion::fluency, 1, 0.9)};
    CHECK_THROWS_AS(aggregate(criteria, 0.0), HumanEvalError);

    std::vector<Judgment> swapped = {make("a", Criterion::formality, 1, 0.9, true)};
    CHECK_THROWS_AS(aggregate(swapped, 0.0), HumanEvalError);

    CHECK_THROWS_AS(aggregate({}, 0.0), HumanEvalError);
}

TEST_CASE("scaling all trusts by a power of two leaves aggregates unchanged") {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        auto group = random_group(rng, Criterion::formality, 3 + rng.below(5));
        double base = aggregate(group, 0.0).value;
        for (double factor : {0.5, 0.25, 0.0625}) {
            auto scaled = group;
            for (auto& j : scaled) j.trust *= factor;
            CHECK(aggregate(scaled, 0.0).value == base);  // exact: exponent shift only
        }
    }
}

TEST_CASE("aggregates stay within the surviving score range") {
    Rng rng(32);
    for (int trial = 0; trial < 50; ++trial) {
        Criterion c = trial % 2 == 0 ? Criterion::fluency : Criterion::meaning;
        auto group = random_group(rng, c, 2 + rng.below(6));
        auto agg = aggregate(group, 0.0);
        int lo = 5, hi = -5;
        for (const auto& j : group) {
            lo = std::min(lo, j.score);
            hi = std::max(hi, j.score);
        }
        CHECK(agg.value >= lo - 1e-12);
        CHECK(agg.value <= hi + 1e-12);
    }
}

TEST_CASE("swapping every pair and negating scores is invisible after reorientation") {
    Rng rng(33);
    auto group = random_group(rng, Criterion::formality, 6);
    double base = aggregate(group, 0.0).value;

    auto flipped = group;
    for (auto& j : flipped) {
        j.score = -j.score;
        j.swapped = true;
    }
    std::vector<Judgment> recovered;
    for (const auto& j : flipped) recovered.push_back(reorient(j));
    CHECK(aggregate(recovered, 0.0).value == base);
}

TEST_CASE("judgment validation enforces scale ranges and trust bounds") {
    CHECK_NOTHROW(validate_judgment(make("a", Criterion::formality, -2, 1.0)));
    CHECK_NOTHROW(validate_judgment(make("a", Criterion::meaning, 3, 0.1)));
    CHECK_THROWS_AS(validate_judgment(make("a", Criterion::formality, 3, 0.9)),
                    HumanEvalError);
    CHECK_THROWS_AS(validate_judgment(make("a", Criterion::fluency, -3, 0.9)),
                    HumanEvalError);
    CHECK_THROWS_AS(validate_judgment(make("a", Criterion::meaning, -1, 0.9)),
                    HumanEvalError);
    CHECK_THROWS_AS(validate_judgment(make("a", Criterion::meaning, 4, 0.9)),
                    HumanEvalError);
    CHECK_THROWS_AS(validate_judgment(make("a", Criterion::formality, 1, 0.0)),
                    HumanEvalError);
    CHECK_THROWS_AS(validate_judgment(make("a", Criterion::formality, 1, 1.5)),
                    HumanEvalError);
    CHECK_THROWS_AS(validate_judgment(make("", Criterion::formality, 1, 0.9)),
                    HumanEvalError);
}

TEST_CASE("tsv parsing round-trips the golden worked example bit-exactly") {
    auto judgments = parse_judgments(read_lines(data_path("humaneval_input.tsv")));
    REQUIRE(judgments.size() == 9);
    auto lines = format_aggregates(aggregate_all(judgments, 0.0));
    auto golden = read_lines(data_path("humaneval_golden.tsv"));
    REQUIRE(lines.size() == golden.size());
    for (size_t i = 0; i < lines.size(); ++i) {
        CAPTURE(i);
        CHECK(lines[i] == golden[i]);
    }
}

TEST_CASE("aggregate_all output order is independent of input order") {
    auto judgments = parse_judgments(read_lines(data_path("humaneval_input.tsv")));
    auto base = format_aggregates(aggregate_all(judgments, 0.0));
    Rng rng(34);
    for (int trial = 0; trial < 5; ++trial) {
        auto shuffled = judgments;
        rng.shuffle(shuffled);
        CHECK(format_aggregates(aggregate_all(shuffled, 0.0)) == base);
    }
}

TEST_CASE("tsv parsing rejects malformed lines") {
    CHECK_THROWS_AS(parse_judgments({"a\tformality\t1\t0.9"}), HumanEvalError);
    CHECK_THROWS_AS(parse_judgments({"a\tpoliteness\t1\t0.9\t0"}), HumanEvalError);
    CHECK_THROWS_AS(parse_judgments({"a\tformality\tx\t0.9\t0"}), HumanEvalError);
    CHECK_THROWS_AS(parse_judgments({"a\tformality\t1\tx\t0"}), HumanEvalError);
    CHECK_THROWS_AS(parse_judgments({"a\tformality\t1\t0.9\tyes"}), HumanEvalError);
    CHECK_THROWS_AS(parse_judgments({"a\tformality\t1.5\t0.9\t0"}), HumanEvalError);
    CHECK_THROWS_AS(parse_judgments({"a\tformality\t9\t0.9\t0"}), HumanEvalError);
    CHECK(parse_judgments({""}).empty());  // blank lines are skipped
}
