#include "ptm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ptm/rng.hpp"

namespace ptm {

namespace {

struct ScoreLabel {
    double score;
    int label;
};

// Shared by roc_auc and the bootstrap fast path. Ascending sort, then per
// tie group credit positives with the negatives strictly below plus half
// the group's own negatives. Every intermediate is a multiple of 0.5 well
// inside integer-exact double range, so the result matches the brute-force
// pairwise sum bit for bit.
double auc_from_pairs(std::vector<ScoreLabel>& pairs, bool* single_class = nullptr) {
    std::size_t n_pos = 0;
    for (const auto& p : pairs) n_pos += p.label ? 1u : 0u;
    std::size_t n_neg = pairs.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        if (!single_class) throw SingleClass();
        *single_class = true;
        return 0.5;
    }
    if (single_class) *single_class = false;
    std::sort(pairs.begin(), pairs.end(),
              [](const ScoreLabel& a, const ScoreLabel& b) { return a.score < b.score; });
    double num = 0;
    std::size_t neg_below = 0;
    std::size_t i = 0;
    while (i < pairs.size()) {
        std::size_t j = i;
        std::size_t group_pos = 0, group_neg = 0;
        while (j < pairs.size() && pairs[j].score == pairs[i].score) {
            if (pairs[j].label)
                ++group_pos;
            else
                ++group_neg;
            ++j;
        }
        num += static_cast<double>(group_pos) *
               (static_cast<double>(neg_below) + 0.5 * static_cast<double>(group_neg));
        neg_below += group_neg;
        i = j;
    }
    return num / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

}  // namespace

SplitPlan make_splits(const std::set<std::string>& students, int k, std::uint64_t seed) {
    if (k < 1) throw Error(ErrorCategory::input, "INVALID_CONFIG", "fold count must be positive");
    if (students.size() < static_cast<std::size_t>(k)) throw TooFewStudents(students.size(), k);
    std::vector<std::string> ids(students.begin(), students.end());
    Rng rng(seed);
    rng.shuffle(ids);
    SplitPlan plan;
    plan.k = k;
    plan.seed = seed;
    for (std::size_t i = 0; i < ids.size(); ++i)
        plan.fold_of[ids[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
    return plan;
}

double roc_auc(const std::vector<PredictionRecord>& records) {
    if (records.empty())
        throw Error(ErrorCategory::evaluation, "EMPTY_RECORDS", "no prediction records");
    std::vector<ScoreLabel> pairs;
    pairs.reserve(records.size());
    for (const auto& r : records) pairs.push_back({r.predicted_prob, r.true_label});
    return auc_from_pairs(pairs);
}

double calibration_error(const std::vector<PredictionRecord>& records, int n_bins) {
    if (records.empty())
        throw Error(ErrorCategory::evaluation, "EMPTY_RECORDS", "no prediction records");
    if (n_bins < 1)
        throw Error(ErrorCategory::evaluation, "INVALID_CONFIG", "bin count must be positive");
    std::vector<std::size_t> count(static_cast<std::size_t>(n_bins), 0);
    std::vector<double> conf_sum(static_cast<std::size_t>(n_bins), 0.0);
    std::vector<double> acc_sum(static_cast<std::size_t>(n_bins), 0.0);
    for (const auto& r : records) {
        int b = static_cast<int>(std::floor(r.predicted_prob * n_bins));
        b = std::clamp(b, 0, n_bins - 1);
        auto bi = static_cast<std::size_t>(b);
        ++count[bi];
        conf_sum[bi] += r.predicted_prob;
        acc_sum[bi] += r.true_label;
    }
    double ece = 0;
    double n = static_cast<double>(records.size());
    for (std::size_t b = 0; b < count.size(); ++b) {
        if (count[b] == 0) continue;
        double cnt = static_cast<double>(count[b]);
        ece += (cnt / n) * std::fabs(acc_sum[b] / cnt - conf_sum[b] / cnt);
    }
    return ece;
}

BootstrapResult paired_bootstrap(const std::vector<PredictionRecord>& records_a,
                                 const std::vector<PredictionRecord>& records_b,
                                 int n_resamples, std::uint64_t seed) {
    if (records_a.empty() || records_b.empty())
        throw Error(ErrorCategory::evaluation, "EMPTY_RECORDS", "no prediction records");
    if (n_resamples < 1)
        throw Error(ErrorCategory::evaluation, "INVALID_CONFIG", "resample count must be positive");
    if (records_a.size() != records_b.size())
        throw KeyMismatch("sizes " + std::to_string(records_a.size()) + " vs " +
                          std::to_string(records_b.size()));

    auto key_order = [](const std::vector<PredictionRecord>& records) {
        std::vector<std::size_t> order(records.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&records](std::size_t x, std::size_t y) {
            const auto& a = records[x];
            const auto& b = records[y];
            return std::tie(a.student_id, a.task_id) < std::tie(b.student_id, b.task_id);
        });
        return order;
    };
    std::vector<std::size_t> order_a = key_order(records_a);
    std::vector<std::size_t> order_b = key_order(records_b);
    for (std::size_t i = 0; i < order_a.size(); ++i) {
        const auto& a = records_a[order_a[i]];
        const auto& b = records_b[order_b[i]];
        if (a.student_id != b.student_id || a.task_id != b.task_id)
            throw KeyMismatch("(" + a.student_id + ", " + a.task_id + ") vs (" + b.student_id +
                              ", " + b.task_id + ")");
    }

    // Per-student aligned record blocks, students in sorted id order.
    std::vector<std::vector<ScoreLabel>> by_student_a, by_student_b;
    for (std::size_t i = 0; i < order_a.size(); ++i) {
        const auto& a = records_a[order_a[i]];
        const auto& b = records_b[order_b[i]];
        if (i == 0 || a.student_id != records_a[order_a[i - 1]].student_id) {
            by_student_a.emplace_back();
            by_student_b.emplace_back();
        }
        by_student_a.back().push_back({a.predicted_prob, a.true_label});
        by_student_b.back().push_back({b.predicted_prob, b.true_label});
    }

    auto pooled_auc = [](const std::vector<std::vector<ScoreLabel>>& blocks) {
        std::vector<ScoreLabel> pairs;
        for (const auto& block : blocks) pairs.insert(pairs.end(), block.begin(), block.end());
        bool single = false;
        return auc_from_pairs(pairs, &single);
    };
    BootstrapResult result;
    result.n_resamples = n_resamples;
    result.seed = seed;
    result.observed_delta = pooled_auc(by_student_a) - pooled_auc(by_student_b);

    Rng rng(seed);
    int n_students = static_cast<int>(by_student_a.size());
    std::vector<double> deltas(static_cast<std::size_t>(n_resamples));
    std::vector<ScoreLabel> sample_a, sample_b;
    for (int r = 0; r < n_resamples; ++r) {
        sample_a.clear();
        sample_b.clear();
        for (int s = 0; s < n_students; ++s) {
            auto pick = static_cast<std::size_t>(rng.uniform_int(0, n_students - 1));
            sample_a.insert(sample_a.end(), by_student_a[pick].begin(), by_student_a[pick].end());
            sample_b.insert(sample_b.end(), by_student_b[pick].begin(), by_student_b[pick].end());
        }
        bool single = false;
        double auc_a = auc_from_pairs(sample_a, &single);
        double auc_b = auc_from_pairs(sample_b, &single);
        deltas[static_cast<std::size_t>(r)] = auc_a - auc_b;
    }

    std::size_t contradictions = 0;
    for (double d : deltas) {
        if (result.observed_delta > 0)
            contradictions += d <= 0 ? 1u : 0u;
        else if (result.observed_delta < 0)
            contradictions += d >= 0 ? 1u : 0u;
        else
            ++contradictions;
    }
    result.p_value = std::min(
        1.0, 2.0 * static_cast<double>(contradictions) / static_cast<double>(n_resamples));

    std::sort(deltas.begin(), deltas.end());
    auto nearest_rank = [&deltas](double q) {
        auto n = static_cast<double>(deltas.size());
        auto rank = static_cast<std::size_t>(std::ceil(q * n));
        rank = std::max<std::size_t>(rank, 1);
        return deltas[rank - 1];
    };
    result.ci_low = nearest_rank(0.025);
    result.ci_high = nearest_rank(0.975);
    return result;
}

std::vector<bool> bonferroni(const std::vector<double>& p_values, double alpha) {
    std::vector<bool> decisions;
    if (p_values.empty()) return decisions;
    double threshold = alpha / static_cast<double>(p_values.size());
    decisions.reserve(p_values.size());
    for (double p : p_values) decisions.push_back(p < threshold);
    return decisions;
}

ProtocolSlice apply_protocol(const StudentExamples& student, const Protocol& protocol) {
    auto view = protocol_view(static_cast<int>(student.tasks.size()), protocol);
    if (!view)
        throw InsufficientHistory(student.student_id, student.tasks.size(),
                                  protocol.context_tasks);
    return {view->context_len, view->target_indices};
}

ModelEvaluation evaluate_model(const std::string& model_name, const ModelFactory& factory,
                               const std::vector<StudentExamples>& students,
                               const SplitPlan& plan, const EvalOptions& options) {
    ModelEvaluation out;
    out.model_name = model_name;
    for (const auto& s : students)
        if (!plan.fold_of.count(s.student_id))
            throw Error(ErrorCategory::evaluation, "UNSPLIT_STUDENT",
                        "student " + s.student_id + " has no fold assignment");

    for (int fold = 0; fold < plan.k; ++fold) {
        std::vector<StudentExamples> train, test;
        for (const auto& s : students) {
            if (plan.fold_of.at(s.student_id) == fold)
                test.push_back(s);
            else
                train.push_back(s);
        }
        std::set<std::string> train_ids;
        for (const auto& s : train) train_ids.insert(s.student_id);
        for (const auto& s : test)
            if (train_ids.count(s.student_id))
                throw Error(ErrorCategory::evaluation, "FOLD_LEAK",
                            "student " + s.student_id + " is in both train and test of fold " +
                                std::to_string(fold));

        auto model = factory();
        FitOptions fit_options;
        if (!options.checkpoint_dir.empty())
            fit_options.checkpoint_dir =
                options.checkpoint_dir + "/fold_" + std::to_string(fold);
        out.traces.push_back(model->fit(train, options.protocol, fit_options));
        out.param_count = model->param_count();

        std::vector<PredictionRecord> fold_records;
        std::size_t fold_students = 0;
        for (const auto& s : test) {
            ProtocolSlice slice;
            try {
                slice = apply_protocol(s, options.protocol);
            } catch (const InsufficientHistory& e) {
                out.exclusions.push_back(e.what());
                continue;
            }
            std::vector<double> probs =
                model->predict_targets(s, slice.context_len, slice.target_indices);
            for (std::size_t i = 0; i < slice.target_indices.size(); ++i) {
                const TaskExample& ex =
                    s.tasks[static_cast<std::size_t>(slice.target_indices[i])];
                fold_records.push_back({model_name, fold, s.student_id, ex.task_id, probs[i],
                                        ex.struggled ? 1 : 0});
            }
            ++fold_students;
        }
        if (fold_records.empty())
            throw Error(ErrorCategory::evaluation, "EMPTY_FOLD",
                        "fold " + std::to_string(fold) + " has no eligible test students");

        FoldMetrics metrics;
        metrics.fold = fold;
        metrics.auc = roc_auc(fold_records);
        metrics.ece = calibration_error(fold_records);
        metrics.n_records = fold_records.size();
        metrics.n_students = fold_students;
        out.folds.push_back(metrics);
        out.records.insert(out.records.end(), fold_records.begin(), fold_records.end());
    }

    double mean = 0;
    for (const auto& f : out.folds) mean += f.auc;
    mean /= static_cast<double>(out.folds.size());
    double var = 0;
    for (const auto& f : out.folds) var += (f.auc - mean) * (f.auc - mean);
    out.auc_mean = mean;
    out.auc_std = out.folds.size() > 1
                      ? std::sqrt(var / static_cast<double>(out.folds.size() - 1))
                      : 0.0;
    out.ece_pooled = calibration_error(out.records);
    return out;
}

std::vector<SensitivityPoint> sensitivity_sweep(StrugglePredictor& model,
                                                const std::vector<StudentExamples>& test,
                                                const Protocol& protocol,
                                                const std::vector<int>& lengths) {
    struct Slice {
        const StudentExamples* student;
        ProtocolSlice slice;
    };
    std::vector<Slice> slices;
    for (const auto& s : test) {
        auto view = protocol_view(static_cast<int>(s.tasks.size()), protocol);
        if (view) slices.push_back({&s, {view->context_len, view->target_indices}});
    }
    if (slices.empty())
        throw Error(ErrorCategory::evaluation, "EMPTY_FOLD", "no eligible test students");

    std::vector<SensitivityPoint> curve;
    for (int length : lengths) {
        if (length < 1)
            throw Error(ErrorCategory::evaluation, "INVALID_CONFIG",
                        "context length must be positive");
        std::vector<PredictionRecord> records;
        for (const auto& item : slices) {
            const StudentExamples& s = *item.student;
            int keep = std::min(length, item.slice.context_len);
            StudentExamples trimmed;
            trimmed.student_id = s.student_id;
            for (int i = item.slice.context_len - keep; i < item.slice.context_len; ++i)
                trimmed.tasks.push_back(s.tasks[static_cast<std::size_t>(i)]);
            std::vector<int> target_indices;
            for (int j : item.slice.target_indices) {
                target_indices.push_back(static_cast<int>(trimmed.tasks.size()));
                trimmed.tasks.push_back(s.tasks[static_cast<std::size_t>(j)]);
            }
            std::vector<double> probs = model.predict_targets(trimmed, keep, target_indices);
            for (std::size_t i = 0; i < target_indices.size(); ++i) {
                const TaskExample& ex =
                    trimmed.tasks[static_cast<std::size_t>(target_indices[i])];
                records.push_back(
                    {"sweep", 0, s.student_id, ex.task_id, probs[i], ex.struggled ? 1 : 0});
            }
        }
        curve.push_back({length, roc_auc(records)});
    }
    return curve;
}

}  // namespace ptm
