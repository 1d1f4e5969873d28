#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "stylemt/ced_select.hpp"
#include "stylemt/ngram_lm.hpp"
#include "stylemt/textproc.hpp"

namespace stylemt {

struct AssemblyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Task { ft, mt };

enum class AssemblyMode {
    ft_only,
    constraint_only,
    multitask_tag_style,
    multitask_style,
    multitask_random,
};

const char* mode_name(AssemblyMode mode);
AssemblyMode parse_mode(const std::string& name);  // throws AssemblyError

// One training example. tag is "<F>", "<I>", or empty for untagged; it is
// prepended to src only at emission (emitted_src), never stored inside src.
// origin records provenance ("ft:<line>:<dir>" or "<style>:<pair id>").
struct TaggedExample {
    std::string tag;
    TokenSeq src;
    TokenSeq tgt;
    Task task = Task::mt;
    std::string origin;
};

struct AssemblyConfig {
    AssemblyMode mode = AssemblyMode::multitask_tag_style;
    int64_t k = 1;
    uint64_t seed = 0;
};

TokenSeq emitted_src(const TaggedExample& example);

// Two examples per aligned pair: (<F>, informal->formal) then
// (<I>, formal->informal), in input order. Stream length mismatch or an
// empty sentence is reported with its 1-based line index.
std::vector<TaggedExample> build_bidirectional_ft(const std::vector<TokenSeq>& informal,
                                                  const std::vector<TokenSeq>& formal);

// Every pair of the sample becomes a task=mt example with the given tag.
// The sample's style must correspond to the tag.
std::vector<TaggedExample> tag_bilingual(const StyleSample& sample, const std::string& tag);

// Builds one of the five training configurations around n = |ft|:
//   ft_only             FT data alone
//   constraint_only     k*n/2 <F>-tagged + k*n/2 <I>-tagged CED selections
//   multitask_tag_style FT duplicated k times + the constraint_only bilingual
//   multitask_style     like multitask_tag_style with MT tags stripped
//   multitask_random    FT duplicated k times + k*n untagged random pairs
// The result order is shuffled by config.seed. The LMs may be null for the
// modes that do not rank by CED. Infeasible sizing reports the maximum
// feasible k for this pool.
std::vector<TaggedExample> assemble(const AssemblyConfig& config,
                                    const std::vector<TaggedExample>& ft,
                                    const std::vector<BitextPair>& bilingual_pool,
                                    const NGramModel* formal_lm,
                                    const NGramModel* informal_lm);

}  // namespace stylemt
