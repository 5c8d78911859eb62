#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ptm/corpus.hpp"
#include "ptm/errors.hpp"

namespace ptm {

struct SyntheticConfig {
    int n_students = 100;
    int n_tasks = 30;
    std::uint64_t seed = 1;

    // Per-skill mastery is Beta(skill_alpha, skill_beta); the sub-1 defaults
    // give a bimodal population of strong and weak students per skill.
    double skill_alpha = 0.7;
    double skill_beta = 0.7;
    // When set, every skill of every student equals this value.
    std::optional<double> fixed_skill;

    // P(struggle) = struggle_scale * (1 - mastery)^struggle_shape, where
    // mastery is the mean of the skills the task requires.
    double struggle_scale = 0.9;
    double struggle_shape = 1.3;
    // Probability of flipping the sampled struggle outcome.
    double noise_rate = 0.05;

    // Extra attempts beyond the first for strugglers; excess-attempt
    // strugglers take roughly 2 + max_extra_attempts .. 2 + 2x of them.
    int max_extra_attempts = 6;

    int min_concepts_per_task = 1;
    int max_concepts_per_task = 3;
    int tests_min = 3;
    int tests_max = 8;
};

struct InvalidConfig : Error {
    explicit InvalidConfig(const std::string& reason)
        : Error(ErrorCategory::input, "INVALID_CONFIG", reason) {}
};

struct SyntheticResult {
    Corpus corpus;
    // Ground truth: student_id -> 10-dim mastery vector in canonical
    // concept order.
    std::map<std::string, std::vector<double>> skills;
};

// Deterministic: identical config (including seed) gives a byte-identical
// corpus when written out.
SyntheticResult generate_synthetic_corpus(const SyntheticConfig& config);

}  // namespace ptm
