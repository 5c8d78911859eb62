#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "ptm/errors.hpp"
#include "ptm/model_input.hpp"

namespace ptm {

struct TooFewStudents : Error {
    TooFewStudents(std::size_t n, int k)
        : Error(ErrorCategory::input, "TOO_FEW_STUDENTS",
                std::to_string(n) + " students cannot fill " + std::to_string(k) + " folds") {}
};

struct InsufficientHistory : Error {
    InsufficientHistory(const std::string& student_id, std::size_t n_tasks, int context_tasks)
        : Error(ErrorCategory::evaluation, "INSUFFICIENT_HISTORY",
                "student " + student_id + " has " + std::to_string(n_tasks) +
                    " tasks; needs more than " + std::to_string(context_tasks)) {}
};

struct SingleClass : Error {
    SingleClass()
        : Error(ErrorCategory::evaluation, "SINGLE_CLASS",
                "both labels must be present to rank positives against negatives") {}
};

struct KeyMismatch : Error {
    explicit KeyMismatch(const std::string& detail)
        : Error(ErrorCategory::evaluation, "KEY_MISMATCH",
                "record sets are not paired: " + detail) {}
};

// Per-student fold assignment: ids sorted, shuffled by seed, dealt
// round-robin, so fold sizes differ by at most one.
struct SplitPlan {
    int k = 5;
    std::uint64_t seed = 0;
    std::map<std::string, int> fold_of;
};

SplitPlan make_splits(const std::set<std::string>& students, int k, std::uint64_t seed);

struct PredictionRecord {
    std::string model_name;
    int fold = 0;
    std::string student_id;
    std::string task_id;
    double predicted_prob = 0;
    int true_label = 0;
};

// Mann-Whitney statistic over all positive-negative pairs:
// P(score_pos > score_neg) + 0.5 * P(tie).
double roc_auc(const std::vector<PredictionRecord>& records);

// Expected calibration error over equal-width probability bins.
double calibration_error(const std::vector<PredictionRecord>& records, int n_bins = 10);

struct BootstrapResult {
    double observed_delta = 0;
    double p_value = 1;
    double ci_low = 0;
    double ci_high = 0;
    int n_resamples = 0;
    std::uint64_t seed = 0;
};

// Resamples students with replacement and recomputes AUC(a) - AUC(b) per
// resample. Two-sided p: fraction of resamples contradicting the observed
// sign, doubled, capped at 1. The 95% interval uses nearest-rank
// percentiles. A single-class resample scores AUC 0.5.
BootstrapResult paired_bootstrap(const std::vector<PredictionRecord>& records_a,
                                 const std::vector<PredictionRecord>& records_b,
                                 int n_resamples = 10000, std::uint64_t seed = 0);

// reject (true) iff p < alpha / #tests.
std::vector<bool> bonferroni(const std::vector<double>& p_values, double alpha = 0.05);

struct ProtocolSlice {
    int context_len = 0;
    std::vector<int> target_indices;
};

// Throws InsufficientHistory when the student has too few tasks; the fold
// runner catches this and logs the exclusion instead.
ProtocolSlice apply_protocol(const StudentExamples& student, const Protocol& protocol);

struct FoldMetrics {
    int fold = 0;
    double auc = 0;
    double ece = 0;
    std::size_t n_records = 0;
    std::size_t n_students = 0;
};

struct ModelEvaluation {
    std::string model_name;
    std::size_t param_count = 0;
    std::vector<FoldMetrics> folds;
    double auc_mean = 0;
    double auc_std = 0;  // sample standard deviation across folds
    double ece_pooled = 0;
    std::vector<PredictionRecord> records;  // pooled test records, all folds
    std::vector<std::vector<LossTraceRow>> traces;  // per fold
    std::vector<std::string> exclusions;
};

using ModelFactory = std::function<std::unique_ptr<StrugglePredictor>()>;

struct EvalOptions {
    Protocol protocol;
    std::uint64_t split_seed = 0;
    int k_folds = 5;
    std::string checkpoint_dir;  // per-fold checkpoints when non-empty
};

// Cross-validated train/eval loop. Each fold trains a fresh model from the
// factory on the other folds' students and predicts the fold's own
// students. Train/test disjointness is re-checked on every fold.
ModelEvaluation evaluate_model(const std::string& model_name, const ModelFactory& factory,
                               const std::vector<StudentExamples>& students,
                               const SplitPlan& plan, const EvalOptions& options);

struct SensitivityPoint {
    int length = 0;
    double auc = 0;
};

// Truncates every test context to its most recent `length` tasks and
// re-runs inference (no retraining); one pooled-AUC point per length.
std::vector<SensitivityPoint> sensitivity_sweep(StrugglePredictor& model,
                                                const std::vector<StudentExamples>& test,
                                                const Protocol& protocol,
                                                const std::vector<int>& lengths);

}  // namespace ptm
