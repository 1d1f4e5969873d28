#include "stylemt/assembly.hpp"

#include <algorithm>

#include "stylemt/util/rng.hpp"

namespace stylemt {

const char* mode_name(AssemblyMode mode) {
    switch (mode) {
        case AssemblyMode::ft_only: return "ft_only";
        case AssemblyMode::constraint_only: return "constraint_only";
        case AssemblyMode::multitask_tag_style: return "multitask_tag_style";
        case AssemblyMode::multitask_style: return "multitask_style";
        case AssemblyMode::multitask_random: return "multitask_random";
    }
    return "?";
}

AssemblyMode parse_mode(const std::string& name) {
    for (AssemblyMode m : {AssemblyMode::ft_only, AssemblyMode::constraint_only,
                           AssemblyMode::multitask_tag_style, AssemblyMode::multitask_style,
                           AssemblyMode::multitask_random}) {
        if (name == mode_name(m)) return m;
    }
    throw AssemblyError("unknown assembly mode: " + name);
}

TokenSeq emitted_src(const TaggedExample& example) {
    if (example.tag.empty()) return example.src;
    TokenSeq out;
    out.reserve(example.src.size() + 1);
    out.push_back(example.tag);
    out.insert(out.end(), example.src.begin(), example.src.end());
    return out;
}

std::vector<TaggedExample> build_bidirectional_ft(const std::vector<TokenSeq>& informal,
                                                  const std::vector<TokenSeq>& formal) {
    if (informal.size() != formal.size())
        throw AssemblyError("FT streams diverge at line " +
                            std::to_string(std::min(informal.size(), formal.size()) + 1));
    std::vector<TaggedExample> out;
    out.reserve(informal.size() * 2);
    for (size_t i = 0; i < informal.size(); ++i) {
        if (informal[i].empty() || formal[i].empty())
            throw AssemblyError("FT pair at line " + std::to_string(i + 1) +
                                " has an empty side");
        std::string line = std::to_string(i + 1);
        out.push_back({kFormalTag, informal[i], formal[i], Task::ft, "ft:" + line + ":F"});
        out.push_back({kInformalTag, formal[i], informal[i], Task::ft, "ft:" + line + ":I"});
    }
    return out;
}

std::vector<TaggedExample> tag_bilingual(const StyleSample& sample, const std::string& tag) {
    bool matches = (tag == kFormalTag && sample.style == Style::formal) ||
                   (tag == kInformalTag && sample.style == Style::informal);
    if (!matches)
        throw AssemblyError(std::string("tag ") + tag + " does not match a " +
                            style_name(sample.style) + " sample");
    std::vector<TaggedExample> out;
    out.reserve(sample.pairs.size());
    for (const auto& pair : sample.pairs) {
        out.push_back({tag, pair.src, pair.tgt, Task::mt,
                       std::string(style_name(sample.style)) + ":" +
                           std::to_string(pair.id)});
    }
    return out;
}

namespace {

// k*n/2 per style for the 2-style modes, k*n for the random mode.
void check_pool(int64_t needed_per_draw, int64_t pool, int64_t n, bool two_style) {
    if (needed_per_draw <= pool) return;
    // largest k with the per-draw requirement satisfied (and k*n even when
    // the draw is a half)
    int64_t max_k = two_style ? (2 * pool) / n : pool / n;
    while (two_style && max_k > 0 && (max_k * n) % 2 != 0) --max_k;
    throw AssemblyError("bilingual pool has " + std::to_string(pool) +
                        " pairs, fewer than the " + std::to_string(needed_per_draw) +
                        " required; maximum feasible k is " + std::to_string(max_k));
}

std::vector<TaggedExample> strip_mt_tags(std::vector<TaggedExample> examples) {
    for (auto& e : examples)
        if (e.task == Task::mt) e.tag.clear();
    return examples;
}

}  // namespace

std::vector<TaggedExample> assemble(const AssemblyConfig& config,
                                    const std::vector<TaggedExample>& ft,
                                    const std::vector<BitextPair>& bilingual_pool,
                                    const NGramModel* formal_lm,
                                    const NGramModel* informal_lm) {
    if (config.k < 1) throw AssemblyError("k must be >= 1");
    if (ft.empty()) throw AssemblyError("FT data is empty; n is undefined");
    const int64_t n = static_cast<int64_t>(ft.size());
    const int64_t kn = config.k * n;
    const int64_t pool = static_cast<int64_t>(bilingual_pool.size());

    const bool two_style = config.mode == AssemblyMode::constraint_only ||
                           config.mode == AssemblyMode::multitask_tag_style ||
                           config.mode == AssemblyMode::multitask_style;
    if (two_style && kn % 2 != 0)
        throw AssemblyError("k*n = " + std::to_string(kn) +
                            " must be even to split between two styles");
    if (two_style && (formal_lm == nullptr || informal_lm == nullptr))
        throw AssemblyError("CED selection needs both style LMs");

    std::vector<TaggedExample> out;

    auto append_ft_copies = [&] {
        for (int64_t copy = 0; copy < config.k; ++copy)
            out.insert(out.end(), ft.begin(), ft.end());
    };
    auto append_two_style = [&] {
        check_pool(kn / 2, pool, n, true);
        auto formal = ced_rank_select(bilingual_pool, *formal_lm, *informal_lm, kn / 2,
                                      Style::formal);
        auto informal = ced_rank_select(bilingual_pool, *formal_lm, *informal_lm, kn / 2,
                                        Style::informal);
        auto tagged_f = tag_bilingual(formal, kFormalTag);
        auto tagged_i = tag_bilingual(informal, kInformalTag);
        out.insert(out.end(), tagged_f.begin(), tagged_f.end());
        out.insert(out.end(), tagged_i.begin(), tagged_i.end());
    };

    switch (config.mode) {
        case AssemblyMode::ft_only:
            out = ft;
            break;
        case AssemblyMode::constraint_only:
            append_two_style();
            break;
        case AssemblyMode::multitask_tag_style:
            append_ft_copies();
            append_two_style();
            break;
        case AssemblyMode::multitask_style:
            append_ft_copies();
            append_two_style();
            out = strip_mt_tags(std::move(out));
            break;
        case AssemblyMode::multitask_random: {
            check_pool(kn, pool, n, false);
            append_ft_copies();
            auto sample =
                random_select(bilingual_pool, kn, derive_seed(config.seed, "assemble.random"));
            for (const auto& pair : sample.pairs) {
                out.push_back({"", pair.src, pair.tgt, Task::mt,
                               "random:" + std::to_string(pair.id)});
            }
            break;
        }
    }

    Rng rng(derive_seed(config.seed, "assemble.shuffle"));
    rng.shuffle(out);
    return out;
}

}  // namespace stylemt
