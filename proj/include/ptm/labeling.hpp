#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ptm/concepts.hpp"
#include "ptm/corpus.hpp"
#include "ptm/errors.hpp"

namespace ptm {

struct TaskOutcome {
    std::string student_id;
    std::string task_id;
    int attempt_count = 0;
    double final_score = 0;  // tests_passed / tests_total of the last attempt
    bool passed_all = false;
};

enum class StruggleRule { none, failed_tests, excess_attempts, both };

struct StrugglingLabel {
    bool value = false;
    StruggleRule rule = StruggleRule::none;
};

enum class Language { python, java };

struct EmptyInput : Error {
    EmptyInput() : Error(ErrorCategory::input, "EMPTY_INPUT", "no events given") {}
};

struct MixedPair : Error {
    MixedPair()
        : Error(ErrorCategory::input, "MIXED_PAIR",
                "events span more than one (student, task) pair") {}
};

struct NoSuccessfulPeers : Error {
    explicit NoSuccessfulPeers(const std::string& task)
        : Error(ErrorCategory::input, "NO_SUCCESSFUL_PEERS",
                "no student completed task " + task + " successfully") {}
};

// Maps source-dataset concept tags onto the canonical ten.
struct ConceptMap {
    std::map<std::string, Concept> raw_to_canonical;
};

// Token-sequence patterns per (language, concept); any alternative matching
// a contiguous token run means the concept is present.
struct PatternTable {
    std::map<std::pair<Language, Concept>, std::vector<std::vector<std::string>>> patterns;
};

ConceptMap load_concept_map(const std::string& path);
PatternTable load_pattern_table(const std::string& path);
// Tables bundled with the library (data/concept_map.csv, data/concept_patterns.csv).
ConceptMap default_concept_map();
PatternTable default_pattern_table();

// `events` must be the attempts of a single (student, task) pair sorted by
// attempt_index; the final score comes from the highest attempt.
TaskOutcome compute_task_outcome(const std::vector<SubmissionEvent>& events);

// Nearest-rank 75th percentile of attempt counts among students who passed
// all tests for the task.
int attempt_threshold(const std::string& task_id, const Corpus& corpus);

// threshold absent means no successful peers existed; only the failed-tests
// rule can then fire.
StrugglingLabel label_struggling(const TaskOutcome& outcome, std::optional<int> threshold);

ConceptSet map_concepts(const std::vector<std::string>& raw_concepts, const ConceptMap& table,
                        std::vector<std::string>* warnings = nullptr);

// Comment and string-literal content never counts as a token.
std::vector<std::string> tokenize_source(const std::string& source_code, Language language);

bool detect_concept_presence(const std::string& source_code, Concept concept_id, Language language,
                             const PatternTable& table);

struct LabeledPair {
    TaskOutcome outcome;
    StrugglingLabel label;
};

struct LabelingResult {
    std::map<PairKey, LabeledPair> pairs;
    std::map<std::string, std::optional<int>> thresholds;
    std::vector<std::string> warnings;
};

// Fills every task's canonical_concepts from its raw tags and labels every
// (student, task) pair in the corpus.
LabelingResult label_corpus(Corpus& corpus, const ConceptMap& map);

// Share of required-concept slots with no detected concept use in the final
// submission, split by struggling label. Supports the lacking-concepts chart.
struct ConceptGapRow {
    Concept concept_id = Concept::ConditionalClauses;
    double pct_lacking_struggling = 0;
    double pct_lacking_non_struggling = 0;
    int n_struggling = 0;
    int n_non_struggling = 0;
};

std::vector<ConceptGapRow> concept_gap_analysis(const Corpus& corpus, const LabelingResult& labels,
                                                const PatternTable& table, Language language);

}  // namespace ptm
