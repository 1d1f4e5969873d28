#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace stylemt {

class HumanEvalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class Criterion { formality, fluency, meaning };

const char* criterion_name(Criterion criterion);
Criterion parse_criterion(const std::string& name);

// One judgment of one item. Formality/fluency scores live in [-2, 2] and are
// direction-sensitive; meaning lives in [0, 3] and is symmetric under swap.
struct Judgment {
    std::string item_id;
    Criterion criterion = Criterion::formality;
    int score = 0;
    double trust = 1.0;  // in (0, 1]
    bool swapped = false;
};

struct AggregateScore {
    std::string item_id;
    Criterion criterion = Criterion::formality;
    double value = 0.0;
    int64_t n_used = 0;
};

// Range and trust checks; throws HumanEvalError.
void validate_judgment(const Judgment& judgment);

// Recovers presentation order: swapped directional scores are negated and the
// flag cleared; meaning scores keep their value.
Judgment reorient(Judgment judgment);

constexpr double kDefaultTrustFloor = 0.7;

// Trust-weighted mean over one item+criterion group. All inputs must already
// be reoriented. Judgments with trust <= trust_floor are dropped.
AggregateScore aggregate(const std::vector<Judgment>& judgments,
                         double trust_floor = kDefaultTrustFloor);

// Tab-separated lines: item_id, criterion, score, trust, swapped(0|1).
std::vector<Judgment> parse_judgments(const std::vector<std::string>& tsv_lines);

// Reorients, groups by (item_id, criterion), aggregates each group, and
// returns results sorted by item_id then criterion.
std::vector<AggregateScore> aggregate_all(const std::vector<Judgment>& judgments,
                                          double trust_floor = kDefaultTrustFloor);

std::vector<std::string> format_aggregates(const std::vector<AggregateScore>& aggregates);

}  // namespace stylemt
