#include "stylemt/eval_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <regex>

#include <boost/math/distributions/students_t.hpp>

#include "stylemt/util/io.hpp"
#include "stylemt/util/rng.hpp"

namespace stylemt {

TokenSeq wmt_tokenize(const std::string& line) {
    static const std::regex skipped("<skipped>");
    static const std::regex hyphen_join("-\n");
    static const std::regex newline("\n");
    static const std::regex punct(R"(([\{-\~\[-` -\&\(-\+\:-\@\/]))");
    static const std::regex period_comma_left(R"(([^0-9])([\.,]))");
    static const std::regex period_comma_right(R"(([\.,])([^0-9]))");
    static const std::regex digit_dash(R"(([0-9])(-))");
    static const std::regex spaces(R"(\s+)");

    std::string s = std::regex_replace(line, skipped, "");
    s = std::regex_replace(s, hyphen_join, "");
    s = std::regex_replace(s, newline, " ");
    s = " " + s + " ";
    s = std::regex_replace(s, punct, " $1 ");
    s = std::regex_replace(s, period_comma_left, "$1 $2 ");
    s = std::regex_replace(s, period_comma_right, " $1 $2");
    s = std::regex_replace(s, digit_dash, "$1 $2 ");
    s = std::regex_replace(s, spaces, " ");
    if (!s.empty() && s.front() == ' ') s.erase(s.begin());
    if (!s.empty() && s.back() == ' ') s.pop_back();
    return split_ws(s);
}

BleuStats& BleuStats::operator+=(const BleuStats& other) {
    for (int n = 0; n < 4; ++n) {
        correct[n] += other.correct[n];
        total[n] += other.total[n];
    }
    hyp_len += other.hyp_len;
    ref_len += other.ref_len;
    return *this;
}

namespace {

using NgramCounts = std::map<std::string, int64_t>;

NgramCounts count_ngrams(const TokenSeq& tokens, int n) {
    NgramCounts counts;
    if (static_cast<int>(tokens.size()) < n) return counts;
    for (size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string key = tokens[i];
        for (int j = 1; j < n; ++j) {
            key += '\x1f';
            key += tokens[i + j];
        }
        counts[key] += 1;
    }
    return counts;
}

}  // namespace

BleuStats sentence_stats(const TokenSeq& hyp, const std::vector<TokenSeq>& refs) {
    if (refs.empty()) throw EvalError("hypothesis has no references");
    BleuStats stats;
    stats.hyp_len = static_cast<int64_t>(hyp.size());

    int64_t best_len = static_cast<int64_t>(refs[0].size());
    for (const auto& ref : refs) {
        int64_t len = static_cast<int64_t>(ref.size());
        int64_t best_diff = std::llabs(best_len - stats.hyp_len);
        int64_t diff = std::llabs(len - stats.hyp_len);
        if (diff < best_diff || (diff == best_diff && len < best_len)) best_len = len;
    }
    stats.ref_len = best_len;

    for (int n = 1; n <= 4; ++n) {
        NgramCounts hyp_counts = count_ngrams(hyp, n);
        NgramCounts max_ref;
        for (const auto& ref : refs) {
            for (const auto& [gram, count] : count_ngrams(ref, n)) {
                auto& slot = max_ref[gram];
                slot = std::max(slot, count);
            }
        }
        int64_t matched = 0, total = 0;
        for (const auto& [gram, count] : hyp_counts) {
            total += count;
            auto it = max_ref.find(gram);
            if (it != max_ref.end()) matched += std::min(count, it->second);
        }
        stats.correct[n - 1] = matched;
        stats.total[n - 1] = total;
    }
    return stats;
}

BleuReport bleu_from_stats(const BleuStats& stats) {
    BleuReport report;
    report.hyp_len = stats.hyp_len;
    report.ref_len = stats.ref_len;
    if (stats.hyp_len == 0) return report;  // bleu 0, bp 0

    report.brevity_penalty =
        stats.hyp_len >= stats.ref_len
            ? 1.0
            : std::exp(1.0 - static_cast<double>(stats.ref_len) / stats.hyp_len);

    double log_sum = 0.0;
    bool any_zero = false;
    for (int n = 0; n < 4; ++n) {
        double p = stats.total[n] > 0
                       ? static_cast<double>(stats.correct[n]) / stats.total[n]
                       : 0.0;
        report.precisions[n] = p;
        if (p <= 0.0) {
            any_zero = true;
        } else {
            log_sum += 0.25 * std::log(p);
        }
    }
    if (!any_zero) report.bleu = 100.0 * report.brevity_penalty * std::exp(log_sum);
    return report;
}

std::vector<BleuStats> per_sentence_stats(const EvalSet& set) {
    if (set.hypotheses.empty()) throw EvalError("evaluation set is empty");
    if (set.hypotheses.size() != set.references.size())
        throw EvalError("hypothesis and reference lists are misaligned: " +
                        std::to_string(set.hypotheses.size()) + " vs " +
                        std::to_string(set.references.size()));
    std::vector<BleuStats> out;
    out.reserve(set.hypotheses.size());
    for (size_t i = 0; i < set.hypotheses.size(); ++i) {
        std::vector<TokenSeq> refs;
        for (const auto& r : set.references[i]) refs.push_back(wmt_tokenize(r));
        out.push_back(sentence_stats(wmt_tokenize(set.hypotheses[i]), refs));
    }
    return out;
}

BleuReport bleu(const EvalSet& set) {
    BleuStats sum;
    for (const auto& s : per_sentence_stats(set)) sum += s;
    return bleu_from_stats(sum);
}

double bootstrap(const std::vector<std::string>& sys_a,
                 const std::vector<std::string>& sys_b,
                 const std::vector<std::vector<std::string>>& references,
                 int64_t n_samples, uint64_t seed) {
    if (sys_a.size() != sys_b.size() || sys_a.size() != references.size())
        throw EvalError("bootstrap inputs are misaligned");
    if (n_samples < 100) throw EvalError("bootstrap needs at least 100 resamples");

    auto stats_a = per_sentence_stats({sys_a, references});
    auto stats_b = per_sentence_stats({sys_b, references});
    const size_t n = stats_a.size();

    int64_t a_not_better = 0;
    for (int64_t sample = 0; sample < n_samples; ++sample) {
        Rng rng(derive_seed(seed, "bootstrap." + std::to_string(sample)));
        BleuStats sum_a, sum_b;
        for (size_t i = 0; i < n; ++i) {
            size_t pick = rng.below(n);
            sum_a += stats_a[pick];
            sum_b += stats_b[pick];
        }
        if (bleu_from_stats(sum_a).bleu <= bleu_from_stats(sum_b).bleu) ++a_not_better;
    }
    return static_cast<double>(a_not_better) / static_cast<double>(n_samples);
}

TTestResult paired_ttest(const std::vector<double>& scores_a,
                         const std::vector<double>& scores_b) {
    if (scores_a.size() != scores_b.size())
        throw EvalError("paired t-test inputs are misaligned");
    const size_t n = scores_a.size();
    if (n < 2) throw EvalError("paired t-test needs at least 2 pairs");

    double mean = 0.0;
    for (size_t i = 0; i < n; ++i) mean += scores_a[i] - scores_b[i];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double d = scores_a[i] - scores_b[i] - mean;
        ss += d * d;
    }
    double var = ss / static_cast<double>(n - 1);

    TTestResult result;
    result.df = static_cast<int64_t>(n) - 1;
    if (var == 0.0) {
        result.degenerate = true;
        result.t = mean == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        result.p_value = mean == 0.0 ? 1.0 : 0.0;
        return result;
    }
    result.t = mean / std::sqrt(var / static_cast<double>(n));
    boost::math::students_t dist(static_cast<double>(result.df));
    result.p_value = 2.0 * boost::math::cdf(dist, -std::abs(result.t));
    return result;
}

}  // namespace stylemt
