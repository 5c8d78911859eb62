#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"
#include "ptm/baselines.hpp"
#include "ptm/model_input.hpp"
#include "ptm/rng.hpp"

using namespace ptm;

namespace {

TrainConfig small_config(std::uint64_t seed = 1) {
    TrainConfig c;
    c.hidden_size = 6;
    c.epochs = 2;
    c.learning_rate = 1e-3;
    c.batch_size = 4;
    c.max_attempts_per_task = 4;
    c.seed = seed;
    c.attn_dim = 4;
    c.student_ref_dim = 3;
    return c;
}

std::vector<std::string> vocab4() { return {"t1", "t2", "t3", "t4"}; }

Embedding random_embedding(Rng& rng, int dim) {
    Embedding e(static_cast<std::size_t>(dim));
    for (auto& v : e) v = static_cast<float>(rng.uniform(-0.5, 0.5));
    return e;
}

std::vector<StudentExamples> random_students(int n_students, int n_tasks, int embed_dim,
                                             std::uint64_t seed) {
    Rng rng(seed);
    std::vector<StudentExamples> out;
    for (int s = 0; s < n_students; ++s) {
        StudentExamples st;
        st.student_id = "s" + std::to_string(100 + s);
        for (int k = 0; k < n_tasks; ++k) {
            TaskExample ex;
            ex.task_id = "t" + std::to_string(1 + (k % 4));
            int n_attempts = rng.uniform_int(1, 3);
            for (int i = 0; i < n_attempts; ++i)
                ex.attempt_embeddings.push_back(random_embedding(rng, embed_dim));
            ex.task_text_embedding = random_embedding(rng, embed_dim);
            ex.requirements[0] = 1.0;
            for (int i = kNumConcepts; i < kNumSkills; ++i)
                ex.requirements[static_cast<std::size_t>(i)] = 1.0;
            ex.final_score = rng.uniform_int(0, 4) / 4.0;
            ex.attempt_count = n_attempts;
            ex.struggled = rng.bernoulli(0.4);
            st.tasks.push_back(std::move(ex));
        }
        out.push_back(std::move(st));
    }
    return out;
}

using Interactions = std::vector<std::pair<std::string, bool>>;

}  // namespace

TEST_CASE("factory builds every model and rejects unknown names") {
    TrainConfig cfg = small_config();
    auto vocab = vocab4();
    for (const std::string name : {"ptm", "dkt_target", "sakt", "no_tax", "no_tax_no_hist"}) {
        auto model = make_model(name, cfg, 8, vocab);
        REQUIRE(model != nullptr);
        CHECK(model->name() == name);
        CHECK(model->param_count() > 0);
    }
    CHECK_THROWS_AS((void)make_model("gpt", cfg, 8, vocab), Error);
}

TEST_CASE("dkt forward: valid probability, deterministic, label sensitive") {
    DktModel model(small_config(3), vocab4());
    Interactions history = {{"t1", false}, {"t2", true}, {"t3", false}};

    double p = model.forward_value(history, "t4");
    CHECK(p > 0.0);
    CHECK(p < 1.0);
    CHECK(model.forward_value(history, "t4") == p);

    DktModel twin(small_config(3), vocab4());
    CHECK(twin.forward_value(history, "t4") == p);

    // outcome labels are part of the interaction encoding
    Interactions flipped = history;
    flipped[1].second = false;
    CHECK(model.forward_value(flipped, "t4") != p);

    // so is interaction order
    Interactions reordered = {{"t2", true}, {"t1", false}, {"t3", false}};
    CHECK(model.forward_value(reordered, "t4") != p);

    // and the queried target
    CHECK(model.forward_value(history, "t1") != p);
}

TEST_CASE("dkt rejects task ids outside its vocabulary") {
    DktModel model(small_config(1), vocab4());
    CHECK_THROWS_AS((void)model.forward_value({{"t9", false}}, "t1"), UnknownTaskId);
    CHECK_THROWS_AS((void)model.forward_value({{"t1", false}}, "t9"), UnknownTaskId);
}

TEST_CASE("sakt attends strictly before the target position") {
    SaktModel model(small_config(5), vocab4());
    Interactions history = {{"t1", false}, {"t2", true}, {"t3", false}, {"t1", true}};

    double p = model.forward_value(history, "t4", 2);
    CHECK(p > 0.0);
    CHECK(p < 1.0);

    // anything at or past the target position is invisible
    Interactions tail_changed = history;
    tail_changed[2] = {"t4", true};
    tail_changed[3] = {"t2", false};
    CHECK(model.forward_value(tail_changed, "t4", 2) == p);

    Interactions cut(history.begin(), history.begin() + 2);
    CHECK(model.forward_value(cut, "t4", 2) == p);

    // earlier interactions do matter
    Interactions head_changed = history;
    head_changed[0].second = true;
    CHECK(model.forward_value(head_changed, "t4", 2) != p);

    // full-context query differs from the truncated one
    CHECK(model.forward_value(history, "t4", 4) != p);
}

TEST_CASE("sakt clamps positions beyond its table") {
    SaktModel model(small_config(6), vocab4());
    Interactions longhist;
    Rng rng(2);
    for (int i = 0; i < 150; ++i)
        longhist.emplace_back("t" + std::to_string(1 + rng.uniform_int(0, 3)), rng.bernoulli(0.5));
    double p = model.forward_value(longhist, "t2", static_cast<int>(longhist.size()));
    CHECK(std::isfinite(p));
    CHECK(p > 0.0);
    CHECK(p < 1.0);
}

TEST_CASE("sakt rejects unknown task ids") {
    SaktModel model(small_config(1), vocab4());
    CHECK_THROWS_AS((void)model.forward_value({{"t1", false}}, "t9", 1), UnknownTaskId);
}

TEST_CASE("ablations: history detail only influences no_tax") {
    TrainConfig cfg = small_config(7);
    auto students = random_students(1, 5, 8, 1234);
    StudentExamples& student = students[0];
    REQUIRE(student.tasks[0].attempt_embeddings.size() >= 2);

    AblationModel no_tax(cfg, 8, AblationVariant::no_tax);
    AblationModel no_hist(cfg, 8, AblationVariant::no_tax_no_hist);
    CHECK(no_tax.name() == "no_tax");
    CHECK(no_hist.name() == "no_tax_no_hist");
    CHECK(no_tax.variant() == AblationVariant::no_tax);
    CHECK(no_hist.variant() == AblationVariant::no_tax_no_hist);

    std::vector<double> base_full = no_tax.predict_targets(student, 3, {3, 4});
    std::vector<double> base_final = no_hist.predict_targets(student, 3, {3, 4});
    for (double p : base_full) {
        CHECK(p > 0.0);
        CHECK(p < 1.0);
    }

    // perturb a non-final attempt of a context task
    StudentExamples tweaked = student;
    for (auto& v : tweaked.tasks[0].attempt_embeddings.front()) v += 0.25f;

    CHECK(no_tax.predict_targets(tweaked, 3, {3, 4}) != base_full);
    CHECK(no_hist.predict_targets(tweaked, 3, {3, 4}) == base_final);

    // the final attempt matters to both
    StudentExamples final_tweaked = student;
    for (auto& v : final_tweaked.tasks[0].attempt_embeddings.back()) v += 0.25f;
    CHECK(no_tax.predict_targets(final_tweaked, 3, {3, 4}) != base_full);
    CHECK(no_hist.predict_targets(final_tweaked, 3, {3, 4}) != base_final);
}

TEST_CASE("no_tax truncates long attempt sequences like the full model") {
    TrainConfig cfg = small_config(9);
    cfg.max_attempts_per_task = 3;
    AblationModel model(cfg, 6, AblationVariant::no_tax);

    auto students = random_students(1, 4, 6, 5);
    StudentExamples& student = students[0];
    Rng rng(42);
    auto& attempts = student.tasks[0].attempt_embeddings;
    attempts.clear();
    for (int i = 0; i < 6; ++i) attempts.push_back(random_embedding(rng, 6));

    std::vector<double> full = model.predict_targets(student, 2, {3});

    StudentExamples trimmed = student;
    auto& tr = trimmed.tasks[0].attempt_embeddings;
    tr.assign(attempts.end() - 3, attempts.end());
    CHECK(model.predict_targets(trimmed, 2, {3}) == full);

    // attempts inside the window still matter
    StudentExamples shorter = trimmed;
    shorter.tasks[0].attempt_embeddings.erase(shorter.tasks[0].attempt_embeddings.begin());
    CHECK(model.predict_targets(shorter, 2, {3}) != full);
}

TEST_CASE("every baseline fits with a bce-only trace") {
    TrainConfig cfg = small_config(11);
    cfg.epochs = 3;
    auto students = random_students(6, 5, 8, 321);
    Protocol protocol{3, 2};
    auto vocab = vocab4();

    for (const std::string name : {"dkt_target", "sakt", "no_tax", "no_tax_no_hist"}) {
        CAPTURE(name);
        auto model = make_model(name, cfg, 8, vocab);
        auto trace = model->fit(students, protocol, {});
        REQUIRE(trace.size() == 3);
        for (const auto& row : trace) {
            CHECK(std::isfinite(row.bce));
            CHECK(row.mae == 0.0);
            CHECK(row.total == row.bce);
        }
        auto probs = model->predict_targets(students[0], 3, {3, 4});
        REQUIRE(probs.size() == 2);
        for (double p : probs) {
            CHECK(p > 0.0);
            CHECK(p < 1.0);
        }
    }
}

TEST_CASE("baseline training is seed reproducible") {
    TrainConfig cfg = small_config(77);
    auto students = random_students(5, 5, 8, 88);
    Protocol protocol{3, 2};

    for (const std::string name : {"dkt_target", "no_tax_no_hist"}) {
        CAPTURE(name);
        auto a = make_model(name, cfg, 8, vocab4());
        auto b = make_model(name, cfg, 8, vocab4());
        auto ta = a->fit(students, protocol, {});
        auto tb = b->fit(students, protocol, {});
        REQUIRE(ta.size() == tb.size());
        for (std::size_t i = 0; i < ta.size(); ++i) CHECK(ta[i].bce == tb[i].bce);
        CHECK(a->predict_targets(students[1], 3, {4}) == b->predict_targets(students[1], 3, {4}));
    }
}

TEST_CASE("dkt and sakt learn through predict_targets on protocol slices") {
    TrainConfig cfg = small_config(13);
    cfg.epochs = 2;
    auto students = random_students(4, 5, 8, 55);

    DktModel dkt(cfg, vocab4());
    auto before = dkt.forward_value({{"t1", true}}, "t2");
    dkt.fit(students, Protocol{3, 2}, {});
    CHECK(dkt.forward_value({{"t1", true}}, "t2") != before);

    // predict_targets consumes the first context_len tasks as interactions
    auto probs = dkt.predict_targets(students[0], 3, {3, 4});
    Interactions ctx;
    for (int i = 0; i < 3; ++i)
        ctx.emplace_back(students[0].tasks[static_cast<std::size_t>(i)].task_id,
                         students[0].tasks[static_cast<std::size_t>(i)].struggled);
    CHECK(probs[0] == dkt.forward_value(ctx, students[0].tasks[3].task_id));
    CHECK(probs[1] == dkt.forward_value(ctx, students[0].tasks[4].task_id));
}
