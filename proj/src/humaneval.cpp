#include "stylemt/humaneval.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include "stylemt/util/io.hpp"

namespace stylemt {

const char* criterion_name(Criterion criterion) {
    switch (criterion) {
        case Criterion::formality: return "formality";
        case Criterion::fluency: return "fluency";
        case Criterion::meaning: return "meaning";
    }
    return "?";
}

Criterion parse_criterion(const std::string& name) {
    for (Criterion c : {Criterion::formality, Criterion::fluency, Criterion::meaning}) {
        if (name == criterion_name(c)) return c;
    }
    throw HumanEvalError("unknown criterion: " + name);
}

void validate_judgment(const Judgment& judgment) {
    if (judgment.item_id.empty()) throw HumanEvalError("judgment has an empty item id");
    const bool directional = judgment.criterion != Criterion::meaning;
    const int lo = directional ? -2 : 0;
    const int hi = directional ? 2 : 3;
    if (judgment.score < lo || judgment.score > hi)
        throw HumanEvalError("item " + judgment.item_id + ": " +
                             criterion_name(judgment.criterion) + " score " +
                             std::to_string(judgment.score) + " outside [" +
                             std::to_string(lo) + "," + std::to_string(hi) + "]");
    if (!(judgment.trust > 0.0 && judgment.trust <= 1.0))
        throw HumanEvalError("item " + judgment.item_id + ": trust " +
                             fmt_general(judgment.trust, 6) + " outside (0,1]");
}

Judgment reorient(Judgment judgment) {
    if (judgment.swapped) {
        if (judgment.criterion != Criterion::meaning) judgment.score = -judgment.score;
        judgment.swapped = false;
    }
    return judgment;
}

AggregateScore aggregate(const std::vector<Judgment>& judgments, double trust_floor) {
    if (judgments.empty()) throw HumanEvalError("no judgments to aggregate");
    const std::string& item = judgments.front().item_id;
    const Criterion criterion = judgments.front().criterion;

    double weighted = 0.0, weight = 0.0;
    int64_t used = 0;
    for (const auto& j : judgments) {
        if (j.item_id != item || j.criterion != criterion)
            throw HumanEvalError("mixed groups: item " + item + "/" +
                                 criterion_name(criterion) + " vs " + j.item_id + "/" +
                                 criterion_name(j.criterion));
        if (j.swapped)
            throw HumanEvalError("item " + item + ": judgment not reoriented");
        if (j.trust <= trust_floor) continue;
        weighted += j.score * j.trust;
        weight += j.trust;
        ++used;
    }
    if (used == 0)
        throw HumanEvalError("item " + item + ": no judgment above the trust floor");
    return {item, criterion, weighted / weight, used};
}

std::vector<Judgment> parse_judgments(const std::vector<std::string>& tsv_lines) {
    std::vector<Judgment> out;
    for (size_t i = 0; i < tsv_lines.size(); ++i) {
        const std::string& line = tsv_lines[i];
        if (line.empty()) continue;
        auto fields = split_on(line, '\t');
        if (fields.size() != 5)
            throw HumanEvalError("line " + std::to_string(i + 1) + ": expected 5 fields, got " +
                                 std::to_string(fields.size()));
        Judgment j;
        j.item_id = fields[0];
        j.criterion = parse_criterion(fields[1]);
        try {
            size_t pos = 0;
            j.score = std::stoi(fields[2], &pos);
            if (pos != fields[2].size()) throw std::invalid_argument(fields[2]);
            j.trust = std::stod(fields[3], &pos);
            if (pos != fields[3].size()) throw std::invalid_argument(fields[3]);
        } catch (const std::exception&) {
            throw HumanEvalError("line " + std::to_string(i + 1) + ": bad numeric field");
        }
        if (fields[4] == "0") {
            j.swapped = false;
        } else if (fields[4] == "1") {
            j.swapped = true;
        } else {
            throw HumanEvalError("line " + std::to_string(i + 1) + ": swapped must be 0 or 1");
        }
        validate_judgment(j);
        out.push_back(std::move(j));
    }
    return out;
}

std::vector<AggregateScore> aggregate_all(const std::vector<Judgment>& judgments,
                                          double trust_floor) {
    std::map<std::pair<std::string, int>, std::vector<Judgment>> groups;
    for (const auto& j : judgments)
        groups[{j.item_id, static_cast<int>(j.criterion)}].push_back(reorient(j));
    std::vector<AggregateScore> out;
    out.reserve(groups.size());
    for (const auto& [key, group] : groups) out.push_back(aggregate(group, trust_floor));
    return out;
}

std::vector<std::string> format_aggregates(const std::vector<AggregateScore>& aggregates) {
    std::vector<std::string> out;
    out.reserve(aggregates.size());
    for (const auto& a : aggregates) {
        out.push_back(a.item_id + "\t" + criterion_name(a.criterion) + "\t" +
                      fmt_general(a.value, 12) + "\t" + std::to_string(a.n_used));
    }
    return out;
}

}  // namespace stylemt
