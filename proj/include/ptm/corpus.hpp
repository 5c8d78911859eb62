#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ptm/concepts.hpp"
#include "ptm/errors.hpp"

namespace ptm {

struct SubmissionEvent {
    std::string student_id;
    std::string task_id;
    int attempt_index = 0;  // 1-based within a (student, task) pair
    std::int64_t timestamp = 0;  // seconds since the Unix epoch, UTC
    std::string source_code;
    int tests_passed = 0;
    int tests_total = 0;

    bool operator==(const SubmissionEvent&) const = default;
};

struct TaskSpec {
    std::string task_id;
    std::string prompt_text;
    std::vector<std::string> raw_concepts;
    ConceptSet canonical_concepts = 0;  // filled by the labeling stage
    std::optional<int> ordinal;

    bool operator==(const TaskSpec&) const = default;
};

struct Corpus {
    std::map<std::string, TaskSpec> tasks;
    // Kept in canonical order: (student_id, task_id, attempt_index).
    std::vector<SubmissionEvent> events;
    std::set<std::string> students;

    bool operator==(const Corpus&) const = default;
};

struct StudentHistory {
    struct Entry {
        TaskSpec task;
        std::vector<SubmissionEvent> events;  // sorted by attempt_index
    };
    std::string student_id;
    // Sorted by first-attempt timestamp, ties broken by task_id.
    std::vector<Entry> entries;
};

struct SchemaError : Error {
    SchemaError(std::size_t row_, const std::string& column_, const std::string& reason)
        : Error(ErrorCategory::input, "SCHEMA_ERROR",
                "row " + std::to_string(row_) + ", column " + column_ + ": " + reason),
          row(row_),
          column(column_) {}
    std::size_t row;
    std::string column;
};

struct DuplicateAttempt : Error {
    DuplicateAttempt(const std::string& student, const std::string& task, int attempt)
        : Error(ErrorCategory::input, "DUPLICATE_ATTEMPT",
                "duplicate attempt " + std::to_string(attempt) + " for student " + student +
                    ", task " + task) {}
};

struct UnknownStudent : Error {
    explicit UnknownStudent(const std::string& student)
        : Error(ErrorCategory::input, "UNKNOWN_STUDENT", "student not in corpus: " + student) {}
};

// Reads tasks.csv + events.csv from `dir` and validates every invariant:
// schema conformance, tests_passed <= tests_total, contiguous 1..T attempt
// indices with strictly increasing timestamps, events referencing known
// tasks. Events are returned in canonical order regardless of row order.
Corpus load_corpus(const std::string& dir);

// Inverse of load_corpus: writes tasks.csv + events.csv so that
// load_corpus(write_corpus(c)) == c.
void write_corpus(const Corpus& corpus, const std::string& dir);

StudentHistory build_history(const Corpus& corpus, const std::string& student_id);

// Events of one (student, task) pair, sorted by attempt_index.
using PairKey = std::pair<std::string, std::string>;  // (student_id, task_id)
std::map<PairKey, std::vector<SubmissionEvent>> group_events(const Corpus& corpus);

}  // namespace ptm
