#include "stylemt/ngram_lm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <set>

#include "stylemt/util/io.hpp"

namespace stylemt {

namespace {

constexpr double kLog10Floor = -99.0;  // ARPA convention for "no probability"

bool is_reserved(const std::string& token) {
    return token == "<unk>" || token == "<s>" || token == "</s>";
}

}  // namespace

LmVocab::LmVocab() {
    id_to_token_ = {"<unk>", "<s>", "</s>"};
    for (int i = 0; i < size(); ++i) token_to_id_[id_to_token_[i]] = i;
}

LmVocab LmVocab::build(const std::vector<std::string>& sorted_tokens) {
    LmVocab v;
    for (const auto& tok : sorted_tokens) {
        if (is_reserved(tok) || v.token_to_id_.count(tok)) continue;
        v.token_to_id_[tok] = v.size();
        v.id_to_token_.push_back(tok);
    }
    return v;
}

int LmVocab::id(const std::string& token) const {
    auto it = token_to_id_.find(token);
    if (it == token_to_id_.end()) return kUnkId;
    // Reserved markers are never data tokens; literal occurrences in text
    // score as unknown words.
    if (it->second == kBosId || it->second == kEosId) return kUnkId;
    return it->second;
}

NGramModel::Key NGramModel::pack(const int* ids, size_t n) {
    Key key(n * sizeof(int32_t), '\0');
    for (size_t i = 0; i < n; ++i) {
        int32_t v = ids[i];
        std::memcpy(&key[i * sizeof(int32_t)], &v, sizeof(int32_t));
    }
    return key;
}

namespace {

std::vector<int> unpack(const std::string& key) {
    std::vector<int> ids(key.size() / sizeof(int32_t));
    for (size_t i = 0; i < ids.size(); ++i) {
        int32_t v;
        std::memcpy(&v, &key[i * sizeof(int32_t)], sizeof(int32_t));
        ids[i] = v;
    }
    return ids;
}

}  // namespace

NGramModel NGramModel::train(const std::vector<TokenSeq>& corpus, const Options& options) {
    if (options.order < 1) throw LmError("n-gram order must be >= 1");
    if (corpus.empty()) throw LmError("training corpus is empty");

    // Raw frequencies decide the vocabulary; rare tokens map to <unk>.
    std::map<std::string, int64_t> freq;
    for (const auto& sent : corpus)
        for (const auto& tok : sent)
            if (!is_reserved(tok)) freq[tok] += 1;
    std::vector<std::string> kept;
    for (const auto& [tok, count] : freq)
        if (count >= options.min_count) kept.push_back(tok);

    NGramModel m;
    m.options_ = options;
    m.vocab_ = LmVocab::build(kept);
    const int n = options.order;
    m.gram_counts_.resize(n);
    m.context_stats_.resize(n);

    std::vector<int> padded;
    for (const auto& sent : corpus) {
        padded.assign(n - 1, kBosId);
        for (const auto& tok : sent) padded.push_back(m.vocab_.id(tok));
        padded.push_back(kEosId);
        // events are all positions after the padding
        for (size_t e = static_cast<size_t>(n - 1); e < padded.size(); ++e) {
            for (int k = 1; k <= n; ++k) {
                const int* start = padded.data() + e - (k - 1);
                m.gram_counts_[k - 1][pack(start, k)] += 1;
                m.context_stats_[k - 1][pack(start, k - 1)].total += 1;
            }
        }
    }

    for (int k = 1; k <= n; ++k) {
        for (const auto& [key, count] : m.gram_counts_[k - 1]) {
            Key ctx = key.substr(0, key.size() - sizeof(int32_t));
            m.context_stats_[k - 1][ctx].distinct += 1;
        }
    }

    m.discounts_.assign(n, 0.0);
    if (!options.mle) {
        for (int k = 1; k <= n; ++k) {
            int64_t n1 = 0, n2 = 0;
            for (const auto& [key, count] : m.gram_counts_[k - 1]) {
                if (count == 1) ++n1;
                if (count == 2) ++n2;
            }
            double d = (n1 + 2 * n2 == 0) ? 0.5
                                          : static_cast<double>(n1) / static_cast<double>(n1 + 2 * n2);
            m.discounts_[k - 1] = std::clamp(d, 0.01, 0.99);
        }
    }

    m.unigram_total_ = 0;
    m.unigram_types_ = static_cast<int64_t>(m.gram_counts_[0].size());
    for (const auto& [key, count] : m.gram_counts_[0]) m.unigram_total_ += count;
    return m;
}

double NGramModel::prob_ids(const int* context, size_t len, int event) const {
    const int predicted = vocab_.size() - 1;  // everything but <s>
    if (len == 0) {
        int64_t c = 0;
        auto it = gram_counts_[0].find(pack(&event, 1));
        if (it != gram_counts_[0].end()) c = it->second;
        double total = static_cast<double>(unigram_total_);
        if (options_.mle) return static_cast<double>(c) / total;
        double d = discounts_[0];
        return (std::max(static_cast<double>(c) - d, 0.0) +
                d * static_cast<double>(unigram_types_) / static_cast<double>(predicted)) /
               total;
    }
    const size_t k = len + 1;
    auto ctx_it = context_stats_[k - 1].find(pack(context, len));
    if (ctx_it == context_stats_[k - 1].end())
        return prob_ids(context + 1, len - 1, event);
    const auto& stat = ctx_it->second;
    std::vector<int> gram(context, context + len);
    gram.push_back(event);
    int64_t c = 0;
    auto it = gram_counts_[k - 1].find(pack(gram.data(), k));
    if (it != gram_counts_[k - 1].end()) c = it->second;
    double total = static_cast<double>(stat.total);
    if (options_.mle) return static_cast<double>(c) / total;
    double d = discounts_[k - 1];
    double lambda = d * static_cast<double>(stat.distinct) / total;
    return std::max(static_cast<double>(c) - d, 0.0) / total +
           lambda * prob_ids(context + 1, len - 1, event);
}

double NGramModel::prob(const std::vector<int>& context, int event) const {
    if (event == kBosId) throw LmError("<s> is never predicted");
    size_t len = std::min(context.size(), static_cast<size_t>(options_.order - 1));
    const int* start = context.data() + (context.size() - len);
    if (!from_arpa_) return prob_ids(start, len, event);

    // Backoff lookup over the ARPA representation: longest stored gram wins,
    // shorter matches accumulate the skipped contexts' backoff weights.
    for (size_t j = len + 1; j >= 1; --j) {
        std::vector<int> gram(start + (len + 1 - j), start + len);
        gram.push_back(event);
        auto it = arpa_probs_[j - 1].find(pack(gram.data(), j));
        if (it == arpa_probs_[j - 1].end()) continue;
        double log10p = it->second;
        for (size_t i = j; i <= len; ++i) {
            auto ctx_it = context_stats_[i].find(pack(start + (len - i), i));
            if (ctx_it != context_stats_[i].end()) log10p += ctx_it->second.backoff;
        }
        return std::pow(10.0, log10p);
    }
    return 0.0;
}

std::vector<int> NGramModel::encode(const TokenSeq& sentence) const {
    std::vector<int> ids;
    ids.reserve(sentence.size());
    for (const auto& tok : sentence) ids.push_back(vocab_.id(tok));
    return ids;
}

double NGramModel::cross_entropy(const TokenSeq& sentence) const {
    std::vector<int> ids = encode(sentence);
    std::vector<int> context(options_.order - 1, kBosId);
    double sum_log2 = 0.0;
    auto score = [&](int event) {
        double p = prob(context, event);
        sum_log2 += std::log2(p);
        if (options_.order > 1) {
            context.erase(context.begin());
            context.push_back(event);
        }
    };
    for (int id : ids) score(id);
    score(kEosId);
    double t = static_cast<double>(ids.size() + 1);
    return -sum_log2 / t;
}

std::vector<std::vector<int>> NGramModel::observed_contexts(int length) const {
    std::vector<std::vector<int>> out;
    for (const auto& [key, stat] : context_stats_.at(length)) out.push_back(unpack(key));
    std::sort(out.begin(), out.end());
    return out;
}

std::string NGramModel::to_arpa() const {
    if (from_arpa_) throw LmError("model was loaded from ARPA; counts are gone");
    const int n = options_.order;
    // Section entries: observed event k-grams plus context-only k-grams
    // (padding prefixes). Context-only entries carry -99 probability.
    std::vector<std::vector<std::vector<int>>> entries(n);
    for (int k = 1; k <= n; ++k) {
        std::set<std::vector<int>> s;
        for (const auto& [key, count] : gram_counts_[k - 1]) s.insert(unpack(key));
        if (k == 1) {
            for (int id = 0; id < vocab_.size(); ++id) s.insert({id});
        }
        if (k < n) {
            for (const auto& [key, stat] : context_stats_[k]) s.insert(unpack(key));
        }
        entries[k - 1].assign(s.begin(), s.end());
        auto by_token = [this](const std::vector<int>& a, const std::vector<int>& b) {
            for (size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
                const std::string& ta = vocab_.token(a[i]);
                const std::string& tb = vocab_.token(b[i]);
                if (ta != tb) return ta < tb;
            }
            return a.size() < b.size();
        };
        std::sort(entries[k - 1].begin(), entries[k - 1].end(), by_token);
    }

    std::string out = "\\data\\\n";
    for (int k = 1; k <= n; ++k)
        out += "ngram " + std::to_string(k) + "=" + std::to_string(entries[k - 1].size()) + "\n";
    for (int k = 1; k <= n; ++k) {
        out += "\n\\" + std::to_string(k) + "-grams:\n";
        for (const auto& gram : entries[k - 1]) {
            int event = gram.back();
            double log10p = kLog10Floor;
            if (event != kBosId) {
                std::vector<int> ctx(gram.begin(), gram.end() - 1);
                double p = prob(ctx, event);
                log10p = p > 0.0 ? std::max(std::log10(p), kLog10Floor) : kLog10Floor;
            }
            out += fmt_general(log10p, 12);
            out += "\t";
            for (size_t i = 0; i < gram.size(); ++i) {
                if (i) out += " ";
                out += vocab_.token(gram[i]);
            }
            if (k < n) {
                auto it = context_stats_[k].find(pack(gram.data(), gram.size()));
                if (it != context_stats_[k].end()) {
                    double d = discounts_[k];
                    double lambda =
                        options_.mle
                            ? 0.0
                            : d * static_cast<double>(it->second.distinct) /
                                  static_cast<double>(it->second.total);
                    double bo = lambda > 0.0 ? std::max(std::log10(lambda), kLog10Floor)
                                             : kLog10Floor;
                    out += "\t" + fmt_general(bo, 12);
                }
            }
            out += "\n";
        }
    }
    out += "\n\\end\\\n";
    return out;
}

NGramModel NGramModel::from_arpa(const std::string& text) {
    auto lines = split_on(text, '\n');
    size_t i = 0;
    while (i < lines.size() && lines[i] != "\\data\\") ++i;
    if (i == lines.size()) throw LmError("ARPA: missing \\data\\ header");
    ++i;
    std::vector<int64_t> counts;
    for (; i < lines.size(); ++i) {
        if (lines[i].empty()) break;
        auto parts = split_ws(lines[i]);
        if (parts.size() != 2 || parts[0] != "ngram") throw LmError("ARPA: bad count line: " + lines[i]);
        auto eq = parts[1].find('=');
        counts.push_back(std::stoll(parts[1].substr(eq + 1)));
    }
    int n = static_cast<int>(counts.size());
    if (n < 1) throw LmError("ARPA: no ngram counts");

    // First pass over the 1-gram section collects the vocabulary.
    std::vector<std::string> tokens;
    {
        size_t j = i;
        while (j < lines.size() && lines[j] != "\\1-grams:") ++j;
        if (j == lines.size()) throw LmError("ARPA: missing 1-gram section");
        for (++j; j < lines.size() && !lines[j].empty() && lines[j][0] != '\\'; ++j) {
            auto parts = split_ws(lines[j]);
            if (parts.size() < 2) throw LmError("ARPA: bad 1-gram line: " + lines[j]);
            tokens.push_back(parts[1]);
        }
    }
    std::vector<std::string> regular;
    for (const auto& t : tokens)
        if (!is_reserved(t)) regular.push_back(t);
    std::sort(regular.begin(), regular.end());

    NGramModel m;
    m.options_.order = n;
    m.from_arpa_ = true;
    m.vocab_ = LmVocab::build(regular);
    m.arpa_probs_.resize(n);
    m.context_stats_.resize(n);
    m.gram_counts_.resize(n);
    m.discounts_.assign(n, 0.0);

    auto lookup_id = [&m](const std::string& tok) -> int {
        if (tok == "<unk>") return kUnkId;
        if (tok == "<s>") return kBosId;
        if (tok == "</s>") return kEosId;
        return m.vocab_.id(tok);
    };

    int k = 0;
    for (; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        if (line == "\\end\\") break;
        if (!line.empty() && line[0] == '\\' && line.find("-grams:") != std::string::npos) {
            k = std::stoi(line.substr(1));
            continue;
        }
        if (line.empty() || k == 0) continue;
        auto parts = split_ws(line);
        if (parts.size() < static_cast<size_t>(k + 1))
            throw LmError("ARPA: bad " + std::to_string(k) + "-gram line: " + line);
        double log10p = std::stod(parts[0]);
        std::vector<int> gram;
        for (int t = 0; t < k; ++t) gram.push_back(lookup_id(parts[1 + t]));
        m.arpa_probs_[k - 1][pack(gram.data(), gram.size())] = log10p;
        if (parts.size() > static_cast<size_t>(k + 1) && k < n) {
            ContextStat stat;
            stat.backoff = std::stod(parts[k + 1]);
            m.context_stats_[k][pack(gram.data(), gram.size())] = stat;
        }
    }
    return m;
}

}  // namespace stylemt
