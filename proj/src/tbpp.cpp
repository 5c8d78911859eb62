#include "ptm/tbpp.hpp"

#include <algorithm>

namespace ptm {

RequirementVector requirement_vector(const TaskSpec& task) {
    RequirementVector r{};
    for (int i = 0; i < kNumConcepts; ++i)
        r[static_cast<std::size_t>(i)] = has_concept(task.canonical_concepts, static_cast<Concept>(i)) ? 1.0 : 0.0;
    for (int i = kNumConcepts; i < kNumSkills; ++i) r[static_cast<std::size_t>(i)] = 1.0;
    return r;
}

std::vector<double> estimate_profile(const std::vector<std::vector<double>>& columns,
                                     const std::vector<double>& scores, TbppNorm norm) {
    if (columns.empty()) throw EmptyHistory();
    if (columns.size() != scores.size())
        throw Error(ErrorCategory::input, "INVALID_INPUT", "columns/scores length mismatch");
    std::size_t dim = columns.front().size();
    for (std::size_t k = 0; k < columns.size(); ++k) {
        if (columns[k].size() != dim)
            throw Error(ErrorCategory::input, "INVALID_INPUT", "ragged requirement columns");
        for (double v : columns[k]) {
            if (v != 0.0 && v != 1.0)
                throw Error(ErrorCategory::input, "INVALID_INPUT", "requirement entries must be binary");
        }
        if (scores[k] < 0.0 || scores[k] > 1.0)
            throw Error(ErrorCategory::input, "INVALID_INPUT", "scores must be in [0,1]");
    }

    std::vector<double> raw(dim, 0.0);
    std::vector<int> counts(dim, 0);
    for (std::size_t k = 0; k < columns.size(); ++k) {
        for (std::size_t i = 0; i < dim; ++i) {
            if (columns[k][i] == 1.0) {
                raw[i] += scores[k];
                counts[i] += 1;
            }
        }
    }

    std::vector<double> out(dim, 0.0);
    if (norm == TbppNorm::per_skill_mean) {
        for (std::size_t i = 0; i < dim; ++i)
            out[i] = counts[i] ? raw[i] / static_cast<double>(counts[i]) : 0.0;
    } else {
        double lo = *std::min_element(raw.begin(), raw.end());
        double hi = *std::max_element(raw.begin(), raw.end());
        if (hi == lo) {
            std::fill(out.begin(), out.end(), 0.5);
        } else {
            for (std::size_t i = 0; i < dim; ++i) out[i] = (raw[i] - lo) / (hi - lo);
        }
    }
    return out;
}

TBPPVector estimate_tbpp(const std::vector<HistoryOutcome>& history, TbppNorm norm) {
    std::vector<std::vector<double>> columns;
    std::vector<double> scores;
    for (const auto& h : history) {
        columns.emplace_back(h.requirements.begin(), h.requirements.end());
        scores.push_back(h.final_score);
    }
    std::vector<double> flat = estimate_profile(columns, scores, norm);
    TBPPVector out{};
    std::copy(flat.begin(), flat.end(), out.begin());
    return out;
}

}  // namespace ptm
