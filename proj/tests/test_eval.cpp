#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "ptm/eval.hpp"
#include "ptm/hashutil.hpp"
#include "ptm/rng.hpp"

using namespace ptm;

namespace {

PredictionRecord rec(double prob, int label, std::string student = "s", std::string task = "t",
                     int fold = 0) {
    PredictionRecord r;
    r.model_name = "m";
    r.fold = fold;
    r.student_id = std::move(student);
    r.task_id = std::move(task);
    r.predicted_prob = prob;
    r.true_label = label;
    return r;
}

std::vector<PredictionRecord> recs(const std::vector<double>& probs,
                                   const std::vector<int>& labels) {
    std::vector<PredictionRecord> out;
    for (std::size_t i = 0; i < probs.size(); ++i)
        out.push_back(rec(probs[i], labels[i], "s" + std::to_string(i), "t"));
    return out;
}

// O(n^2) pairwise AUC, straight from the Mann-Whitney definition.
double oracle_auc(const std::vector<PredictionRecord>& records) {
    double num = 0;
    std::size_t pairs = 0;
    for (const auto& p : records) {
        if (p.true_label != 1) continue;
        for (const auto& n : records) {
            if (n.true_label != 0) continue;
            ++pairs;
            if (p.predicted_prob > n.predicted_prob)
                num += 1.0;
            else if (p.predicted_prob == n.predicted_prob)
                num += 0.5;
        }
    }
    return num / static_cast<double>(pairs);
}

// Per-bin filtering ECE, independent of the accumulation in the library.
double oracle_ece(const std::vector<PredictionRecord>& records, int n_bins) {
    double total = 0;
    for (int b = 0; b < n_bins; ++b) {
        double conf = 0, acc = 0;
        int count = 0;
        for (const auto& r : records) {
            int bin = static_cast<int>(std::floor(r.predicted_prob * n_bins));
            if (bin >= n_bins) bin = n_bins - 1;
            if (bin < 0) bin = 0;
            if (bin != b) continue;
            conf += r.predicted_prob;
            acc += r.true_label;
            ++count;
        }
        if (count)
            total += (static_cast<double>(count) / static_cast<double>(records.size())) *
                     std::abs(acc / count - conf / count);
    }
    return total;
}

// Deterministic pseudo-noise in [-0.5, 0.5) from the record identity.
double id_noise(const std::string& student, const std::string& task) {
    std::uint64_t h = fnv1a64(student + "/" + task);
    return static_cast<double>(h % 100000) / 100000.0 - 0.5;
}

// StrugglePredictor whose accuracy grows with the context length it is
// given; lets the harness be tested without training anything.
class StubModel : public StrugglePredictor {
public:
    // fitted_sink outlives the model: the harness may destroy each fold's
    // model before the test inspects what it was trained on.
    StubModel(double signal, double noise, int full_context,
              std::set<std::string>* fitted_sink = nullptr)
        : signal_(signal), noise_(noise), full_context_(full_context), fitted_sink_(fitted_sink) {}

    const std::string& name() const override { return name_; }

    std::vector<LossTraceRow> fit(const std::vector<StudentExamples>& train, const Protocol&,
                                  const FitOptions&) override {
        ++fit_calls_;
        for (const auto& s : train) {
            fitted_students_.insert(s.student_id);
            if (fitted_sink_) fitted_sink_->insert(s.student_id);
        }
        return {{1, 0.0, 0.5, 0.5}};
    }

    std::vector<double> predict_targets(const StudentExamples& student, int context_len,
                                        const std::vector<int>& target_indices) override {
        std::vector<double> out;
        double strength =
            std::min(1.0, static_cast<double>(context_len) / static_cast<double>(full_context_));
        for (int j : target_indices) {
            const TaskExample& ex = student.tasks.at(static_cast<std::size_t>(j));
            double dir = ex.struggled ? 1.0 : -1.0;
            double p = 0.5 + dir * signal_ * strength +
                       noise_ * id_noise(student.student_id, ex.task_id);
            out.push_back(std::min(0.999, std::max(0.001, p)));
        }
        return out;
    }

    std::size_t param_count() const override { return 0; }
    const nn::ParamStore& params() const override { return params_; }

    int fit_calls() const { return fit_calls_; }
    const std::set<std::string>& fitted_students() const { return fitted_students_; }

private:
    double signal_, noise_;
    int full_context_;
    std::set<std::string>* fitted_sink_;
    int fit_calls_ = 0;
    std::set<std::string> fitted_students_;
    std::string name_ = "stub";
    nn::ParamStore params_;
};

// 7 tasks per student: 5 context, 2 targets (one struggled, one not).
std::vector<StudentExamples> stub_students(int n) {
    std::vector<StudentExamples> out;
    for (int s = 0; s < n; ++s) {
        StudentExamples st;
        st.student_id = "s" + std::to_string(100 + s);
        for (int k = 0; k < 7; ++k) {
            TaskExample ex;
            ex.task_id = "t" + std::to_string(k);
            ex.struggled = (k == 5);
            ex.final_score = ex.struggled ? 0.4 : 1.0;
            st.tasks.push_back(std::move(ex));
        }
        out.push_back(std::move(st));
    }
    return out;
}

}  // namespace

TEST_CASE("make_splits deals students round-robin") {
    std::set<std::string> students;
    for (int i = 0; i < 23; ++i) students.insert("s" + std::to_string(i));

    SplitPlan plan = make_splits(students, 5, 11);
    CHECK(plan.k == 5);
    CHECK(plan.seed == 11);
    REQUIRE(plan.fold_of.size() == 23);

    std::vector<int> sizes(5, 0);
    for (const auto& [id, fold] : plan.fold_of) {
        REQUIRE(fold >= 0);
        REQUIRE(fold < 5);
        ++sizes[static_cast<std::size_t>(fold)];
    }
    int lo = *std::min_element(sizes.begin(), sizes.end());
    int hi = *std::max_element(sizes.begin(), sizes.end());
    CHECK(hi - lo <= 1);

    SplitPlan again = make_splits(students, 5, 11);
    CHECK(again.fold_of == plan.fold_of);
    SplitPlan other = make_splits(students, 5, 12);
    CHECK(other.fold_of != plan.fold_of);

    CHECK_THROWS_AS(make_splits({"a", "b"}, 3, 0), TooFewStudents);
    CHECK_NOTHROW(make_splits({"a", "b", "c"}, 3, 0));
}

TEST_CASE("roc_auc on the worked example") {
    auto records = recs({0.9, 0.8, 0.3, 0.2}, {1, 0, 1, 0});
    CHECK(roc_auc(records) == 0.75);
}

TEST_CASE("roc_auc endpoints and ties") {
    CHECK(roc_auc(recs({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0})) == 1.0);
    CHECK(roc_auc(recs({0.1, 0.2, 0.8, 0.9}, {1, 1, 0, 0})) == 0.0);
    CHECK(roc_auc(recs({0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0})) == 0.5);
    CHECK(roc_auc(recs({0.4, 0.4, 0.9, 0.1}, {1, 0, 1, 0})) == 0.875);

    CHECK_THROWS_AS((void)roc_auc(recs({0.5, 0.6}, {1, 1})), SingleClass);
    CHECK_THROWS_AS((void)roc_auc({}), Error);
}

TEST_CASE("roc_auc equals the pairwise oracle on tied grids") {
    Rng rng(404);
    for (int trial = 0; trial < 100; ++trial) {
        int n = rng.uniform_int(2, 120);
        std::vector<PredictionRecord> records;
        bool has_pos = false, has_neg = false;
        for (int i = 0; i < n; ++i) {
            int label = rng.bernoulli(0.4) ? 1 : 0;
            has_pos = has_pos || label == 1;
            has_neg = has_neg || label == 0;
            // coarse grid: plenty of exact ties
            double prob = rng.uniform_int(0, 10) / 10.0;
            records.push_back(rec(prob, label, "s" + std::to_string(i)));
        }
        if (!has_pos || !has_neg) {
            records.push_back(rec(0.5, has_pos ? 0 : 1, "sx"));
        }
        CHECK(roc_auc(records) == oracle_auc(records));
    }
}

TEST_CASE("roc_auc is invariant under order-preserving transforms") {
    Rng rng(7);
    std::vector<PredictionRecord> records;
    for (int i = 0; i < 60; ++i)
        records.push_back(
            rec(rng.uniform_int(0, 20) / 20.0, rng.bernoulli(0.5) ? 1 : 0, "s" + std::to_string(i)));
    records.push_back(rec(0.3, 1, "sp"));
    records.push_back(rec(0.3, 0, "sn"));
    double base = roc_auc(records);

    auto squashed = records;
    for (auto& r : squashed) r.predicted_prob = 0.1 + 0.5 * r.predicted_prob;
    CHECK(roc_auc(squashed) == base);
}

TEST_CASE("calibration_error on a hand-worked example") {
    std::vector<PredictionRecord> records = {
        rec(0.2, 0, "a"), rec(0.3, 1, "b"), rec(0.8, 1, "c"), rec(0.9, 1, "d")};
    // bins [0,0.5): conf 0.25, acc 0.5 ; [0.5,1]: conf 0.85, acc 1.0
    CHECK(calibration_error(records, 2) == doctest::Approx(0.5 * 0.25 + 0.5 * 0.15));

    // perfectly calibrated two-bin case
    std::vector<PredictionRecord> calibrated = {
        rec(0.25, 0, "a"), rec(0.25, 0, "b"), rec(0.25, 1, "c"), rec(0.25, 0, "d"),
        rec(0.75, 1, "e"), rec(0.75, 1, "f"), rec(0.75, 1, "g"), rec(0.75, 0, "h")};
    CHECK(calibration_error(calibrated, 2) == doctest::Approx(0.0));

    // prob 1.0 lands in the top bin, not out of range
    CHECK(calibration_error({rec(1.0, 1, "a"), rec(0.0, 0, "b")}, 10) == doctest::Approx(0.0));
}

TEST_CASE("calibration_error equals the filtering oracle") {
    Rng rng(555);
    for (int trial = 0; trial < 60; ++trial) {
        int n = rng.uniform_int(1, 150);
        std::vector<PredictionRecord> records;
        for (int i = 0; i < n; ++i)
            records.push_back(rec(rng.uniform_int(0, 40) / 40.0, rng.bernoulli(0.5) ? 1 : 0,
                                  "s" + std::to_string(i)));
        int bins = rng.uniform_int(1, 15);
        CHECK(calibration_error(records, bins) == oracle_ece(records, bins));
    }
}

TEST_CASE("apply_protocol: context, targets, and exclusions") {
    auto student_with = [](int n_tasks) {
        StudentExamples s;
        s.student_id = "s";
        for (int i = 0; i < n_tasks; ++i) {
            TaskExample ex;
            ex.task_id = "t" + std::to_string(i);
            s.tasks.push_back(std::move(ex));
        }
        return s;
    };
    Protocol p{30, 20};

    ProtocolSlice slice = apply_protocol(student_with(50), p);
    CHECK(slice.context_len == 30);
    REQUIRE(slice.target_indices.size() == 20);
    CHECK(slice.target_indices.front() == 30);
    CHECK(slice.target_indices.back() == 49);

    CHECK(apply_protocol(student_with(35), p).target_indices.size() == 5);
    CHECK(apply_protocol(student_with(31), p).target_indices.size() == 1);
    CHECK(apply_protocol(student_with(60), p).target_indices.size() == 20);

    CHECK_THROWS_AS(apply_protocol(student_with(30), p), InsufficientHistory);
    CHECK_THROWS_AS(apply_protocol(student_with(2), p), InsufficientHistory);
}

TEST_CASE("paired_bootstrap self-comparison gives p exactly 1") {
    auto students = stub_students(12);
    StubModel model(0.3, 0.2, 5);
    std::vector<PredictionRecord> records;
    for (auto& s : students) {
        ProtocolSlice slice = apply_protocol(s, Protocol{5, 2});
        auto probs = model.predict_targets(s, slice.context_len, slice.target_indices);
        for (std::size_t i = 0; i < probs.size(); ++i) {
            const auto& ex = s.tasks[static_cast<std::size_t>(slice.target_indices[i])];
            records.push_back(rec(probs[i], ex.struggled ? 1 : 0, s.student_id, ex.task_id));
        }
    }

    BootstrapResult r = paired_bootstrap(records, records, 500, 9);
    CHECK(r.observed_delta == 0.0);
    CHECK(r.p_value == 1.0);
    CHECK(r.ci_low == 0.0);
    CHECK(r.ci_high == 0.0);
    CHECK(r.n_resamples == 500);
    CHECK(r.seed == 9);
}

TEST_CASE("paired_bootstrap detects strict dominance") {
    auto students = stub_students(10);
    std::vector<PredictionRecord> good, bad;
    for (auto& s : students) {
        for (int j : {5, 6}) {
            const auto& ex = s.tasks[static_cast<std::size_t>(j)];
            int label = ex.struggled ? 1 : 0;
            good.push_back(rec(label ? 0.9 : 0.1, label, s.student_id, ex.task_id));
            bad.push_back(rec(label ? 0.1 : 0.9, label, s.student_id, ex.task_id));
        }
    }
    BootstrapResult r = paired_bootstrap(good, bad, 400, 3);
    CHECK(r.observed_delta == doctest::Approx(1.0));
    CHECK(r.p_value == 0.0);  // every resample keeps the same strict ordering
    CHECK(r.ci_low == doctest::Approx(1.0));
    CHECK(r.ci_high == doctest::Approx(1.0));

    // order of rows must not matter: same records, reversed
    auto bad_reversed = bad;
    std::reverse(bad_reversed.begin(), bad_reversed.end());
    BootstrapResult r2 = paired_bootstrap(good, bad_reversed, 400, 3);
    CHECK(r2.observed_delta == r.observed_delta);
    CHECK(r2.p_value == r.p_value);
}

TEST_CASE("paired_bootstrap is deterministic per seed") {
    auto students = stub_students(14);
    StubModel strong(0.25, 0.35, 5), weak(0.05, 0.35, 5);
    std::vector<PredictionRecord> a, b;
    for (auto& s : students) {
        ProtocolSlice slice = apply_protocol(s, Protocol{5, 2});
        auto pa = strong.predict_targets(s, slice.context_len, slice.target_indices);
        auto pb = weak.predict_targets(s, slice.context_len, slice.target_indices);
        for (std::size_t i = 0; i < pa.size(); ++i) {
            const auto& ex = s.tasks[static_cast<std::size_t>(slice.target_indices[i])];
            a.push_back(rec(pa[i], ex.struggled ? 1 : 0, s.student_id, ex.task_id));
            b.push_back(rec(pb[i], ex.struggled ? 1 : 0, s.student_id, ex.task_id));
        }
    }
    BootstrapResult r1 = paired_bootstrap(a, b, 300, 21);
    BootstrapResult r2 = paired_bootstrap(a, b, 300, 21);
    CHECK(r1.p_value == r2.p_value);
    CHECK(r1.ci_low == r2.ci_low);
    CHECK(r1.ci_high == r2.ci_high);
    CHECK(r1.ci_low <= r1.observed_delta);
    CHECK(r1.observed_delta <= r1.ci_high);
    CHECK(r1.p_value >= 0.0);
    CHECK(r1.p_value <= 1.0);
}

TEST_CASE("paired_bootstrap demands identical record keys") {
    auto a = recs({0.9, 0.2}, {1, 0});
    auto b = recs({0.8, 0.3}, {1, 0});
    b[1].task_id = "other";
    CHECK_THROWS_AS((void)paired_bootstrap(a, b, 100, 0), KeyMismatch);

    auto shorter = std::vector<PredictionRecord>{a[0]};
    CHECK_THROWS_AS((void)paired_bootstrap(a, shorter, 100, 0), KeyMismatch);
}

TEST_CASE("bonferroni compares against alpha over m") {
    std::vector<bool> out = bonferroni({0.01, 0.04, 0.20}, 0.05);
    REQUIRE(out.size() == 3);
    CHECK(out[0]);        // 0.01 < 0.05/3
    CHECK(!out[1]);       // 0.04 >= 0.05/3
    CHECK(!out[2]);

    CHECK(bonferroni({}, 0.05).empty());
    CHECK(bonferroni({0.0}, 0.05) == std::vector<bool>{true});
    CHECK(bonferroni({0.04}, 0.05) == std::vector<bool>{true});
    // the same p fails once more tests share the budget
    CHECK(bonferroni({0.04, 0.9}, 0.05) == std::vector<bool>{false, false});
}

TEST_CASE("evaluate_model runs disjoint folds and aggregates them") {
    auto students = stub_students(15);
    std::set<std::string> ids;
    for (const auto& s : students) ids.insert(s.student_id);
    SplitPlan plan = make_splits(ids, 3, 5);

    std::vector<std::unique_ptr<std::set<std::string>>> fit_sets;
    ModelFactory factory = [&]() {
        fit_sets.push_back(std::make_unique<std::set<std::string>>());
        return std::make_unique<StubModel>(0.3, 0.2, 5, fit_sets.back().get());
    };

    EvalOptions options;
    options.protocol = Protocol{5, 2};
    options.split_seed = 5;
    options.k_folds = 3;
    ModelEvaluation eval = evaluate_model("stub", factory, students, plan, options);

    CHECK(eval.model_name == "stub");
    REQUIRE(eval.folds.size() == 3);
    REQUIRE(fit_sets.size() == 3);
    CHECK(eval.traces.size() == 3);
    CHECK(eval.records.size() == 15 * 2);
    CHECK(eval.exclusions.empty());

    // each fold's model never saw that fold's students
    for (int f = 0; f < 3; ++f) {
        const auto& fitted = *fit_sets[static_cast<std::size_t>(f)];
        for (const auto& r : eval.records) {
            if (r.fold != f) continue;
            CHECK(plan.fold_of.at(r.student_id) == f);
            CHECK(!fitted.count(r.student_id));
        }
    }

    // fold metrics equal direct metric computations on the fold's records
    double mean = 0;
    for (const auto& fm : eval.folds) {
        std::vector<PredictionRecord> fold_records;
        for (const auto& r : eval.records)
            if (r.fold == fm.fold) fold_records.push_back(r);
        CHECK(fm.n_records == fold_records.size());
        CHECK(fm.auc == roc_auc(fold_records));
        CHECK(fm.ece == calibration_error(fold_records, 10));
        mean += fm.auc;
    }
    mean /= 3.0;
    CHECK(eval.auc_mean == doctest::Approx(mean));
    double var = 0;
    for (const auto& fm : eval.folds) var += (fm.auc - mean) * (fm.auc - mean);
    CHECK(eval.auc_std == doctest::Approx(std::sqrt(var / 2.0)));
    CHECK(eval.ece_pooled == doctest::Approx(calibration_error(eval.records, 10)));
}

TEST_CASE("evaluate_model logs students with too little history") {
    auto students = stub_students(9);
    students[0].tasks.resize(4);  // below the 5-task context
    std::set<std::string> ids;
    for (const auto& s : students) ids.insert(s.student_id);
    SplitPlan plan = make_splits(ids, 3, 2);

    EvalOptions options;
    options.protocol = Protocol{5, 2};
    options.k_folds = 3;
    ModelEvaluation eval =
        evaluate_model("stub", [] { return std::make_unique<StubModel>(0.3, 0.1, 5); }, students,
                       plan, options);

    REQUIRE(eval.exclusions.size() == 1);
    CHECK(eval.exclusions[0].find(students[0].student_id) != std::string::npos);
    CHECK(eval.records.size() == 8 * 2);
}

TEST_CASE("evaluate_model refuses students missing from the plan") {
    auto students = stub_students(8);
    std::set<std::string> ids;
    for (const auto& s : students) ids.insert(s.student_id);
    ids.erase(students[7].student_id);
    SplitPlan plan = make_splits(ids, 2, 2);

    EvalOptions options;
    options.protocol = Protocol{5, 2};
    options.k_folds = 2;
    CHECK_THROWS_AS((void)evaluate_model(
                        "stub", [] { return std::make_unique<StubModel>(0.3, 0.1, 5); }, students,
                        plan, options),
                    Error);
}

TEST_CASE("sensitivity_sweep rewards longer contexts for a context-hungry model") {
    auto students = stub_students(40);
    StubModel model(0.12, 0.6, 5);
    Protocol protocol{5, 2};

    auto points = sensitivity_sweep(model, students, protocol, {1, 3, 5});
    REQUIRE(points.size() == 3);
    CHECK(points[0].length == 1);
    CHECK(points[1].length == 3);
    CHECK(points[2].length == 5);
    for (const auto& pt : points) {
        CHECK(pt.auc >= 0.0);
        CHECK(pt.auc <= 1.0);
    }
    CHECK(points[2].auc > points[0].auc);

    // at the full context length the sweep reproduces the untrimmed AUC
    std::vector<PredictionRecord> full;
    for (auto& s : students) {
        ProtocolSlice slice = apply_protocol(s, protocol);
        auto probs = model.predict_targets(s, slice.context_len, slice.target_indices);
        for (std::size_t i = 0; i < probs.size(); ++i) {
            const auto& ex = s.tasks[static_cast<std::size_t>(slice.target_indices[i])];
            full.push_back(rec(probs[i], ex.struggled ? 1 : 0, s.student_id, ex.task_id));
        }
    }
    CHECK(points[2].auc == doctest::Approx(roc_auc(full)));

    CHECK_THROWS_AS((void)sensitivity_sweep(model, students, protocol, {0}), Error);
}
