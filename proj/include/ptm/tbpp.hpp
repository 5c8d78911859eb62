#pragma once

#include <array>
#include <vector>

#include "ptm/concepts.hpp"
#include "ptm/corpus.hpp"
#include "ptm/errors.hpp"

namespace ptm {

// 13 binary entries: the ten canonical concepts in order, then the three
// latent skills, which are always required.
using RequirementVector = std::array<double, kNumSkills>;

// 13 proficiencies in [0,1], same index order.
using TBPPVector = std::array<double, kNumSkills>;

struct EmptyHistory : Error {
    EmptyHistory() : Error(ErrorCategory::input, "EMPTY_HISTORY", "history has no tasks") {}
};

enum class TbppNorm {
    // Per-skill mean of final scores over the tasks requiring the skill
    // (default reading).
    per_skill_mean,
    // Min-max rescaling of the raw A*S products across the 13 skills;
    // a degenerate range maps every entry to 0.5.
    global_minmax,
};

RequirementVector requirement_vector(const TaskSpec& task);

struct HistoryOutcome {
    RequirementVector requirements{};
    double final_score = 0;
};

// Dimension-generic core: columns[k] is the binary requirement column of
// task k, scores[k] its final score.
std::vector<double> estimate_profile(const std::vector<std::vector<double>>& columns,
                                     const std::vector<double>& scores,
                                     TbppNorm norm = TbppNorm::per_skill_mean);

TBPPVector estimate_tbpp(const std::vector<HistoryOutcome>& history,
                         TbppNorm norm = TbppNorm::per_skill_mean);

}  // namespace ptm
