#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <array>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "ptm/rng.hpp"
#include "ptm/tbpp.hpp"

using namespace ptm;

namespace {

// Independent estimator working directly on the requirement matrix. Written
// against the definition, not the library code: skill i averages the final
// scores of the tasks that require it; a skill no task requires stays 0.
std::array<double, kNumSkills> oracle_mean(const std::vector<HistoryOutcome>& history) {
    std::array<double, kNumSkills> out{};
    for (int i = 0; i < kNumSkills; ++i) {
        double sum = 0;
        int n = 0;
        for (const auto& h : history) {
            if (h.requirements[static_cast<std::size_t>(i)] == 1.0) {
                sum += h.final_score;
                ++n;
            }
        }
        out[static_cast<std::size_t>(i)] = n ? sum / n : 0.0;
    }
    return out;
}

std::array<double, kNumSkills> oracle_minmax(const std::vector<HistoryOutcome>& history) {
    std::array<double, kNumSkills> raw{};
    for (const auto& h : history)
        for (int i = 0; i < kNumSkills; ++i)
            raw[static_cast<std::size_t>(i)] += h.requirements[static_cast<std::size_t>(i)] * h.final_score;
    double lo = raw[0], hi = raw[0];
    for (double v : raw) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    std::array<double, kNumSkills> out{};
    for (int i = 0; i < kNumSkills; ++i)
        out[static_cast<std::size_t>(i)] = hi > lo ? (raw[static_cast<std::size_t>(i)] - lo) / (hi - lo) : 0.5;
    return out;
}

std::vector<HistoryOutcome> random_history(Rng& rng, int n_tasks) {
    std::vector<HistoryOutcome> history;
    for (int k = 0; k < n_tasks; ++k) {
        HistoryOutcome h;
        int n_req = rng.uniform_int(1, 3);
        for (int j = 0; j < n_req; ++j)
            h.requirements[static_cast<std::size_t>(rng.uniform_int(0, kNumConcepts - 1))] = 1.0;
        for (int i = kNumConcepts; i < kNumSkills; ++i)
            h.requirements[static_cast<std::size_t>(i)] = 1.0;
        // grid scores so oracle/library agreement can be checked exactly
        h.final_score = rng.uniform_int(0, 8) / 8.0;
        history.push_back(h);
    }
    return history;
}

}  // namespace

TEST_CASE("requirement_vector: concept bits plus always-on latent entries") {
    TaskSpec task;
    task.canonical_concepts =
        with_concept(with_concept(0, Concept::Loops), Concept::Dictionaries);
    RequirementVector r = requirement_vector(task);
    for (int i = 0; i < kNumConcepts; ++i) {
        double expect = (i == static_cast<int>(Concept::Loops) ||
                         i == static_cast<int>(Concept::Dictionaries))
                            ? 1.0
                            : 0.0;
        CHECK(r[static_cast<std::size_t>(i)] == expect);
    }
    for (int i = kNumConcepts; i < kNumSkills; ++i) CHECK(r[static_cast<std::size_t>(i)] == 1.0);
}

TEST_CASE("per-skill mean matches a hand-checked example") {
    std::vector<HistoryOutcome> history(3);
    history[0].requirements = {1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1};
    history[0].final_score = 1.0;
    history[1].requirements = {1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1};
    history[1].final_score = 0.5;
    history[2].requirements = {0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1};
    history[2].final_score = 0.0;

    TBPPVector t = estimate_tbpp(history);
    CHECK(t[0] == doctest::Approx(0.75));   // (1.0 + 0.5) / 2
    CHECK(t[1] == doctest::Approx(0.5));    // (1.0 + 0.0) / 2
    CHECK(t[2] == 0.0);                     // never required
    CHECK(t[10] == doctest::Approx(0.5));   // latent: mean of all scores
    CHECK(t[11] == t[10]);
    CHECK(t[12] == t[10]);
}

TEST_CASE("estimate_tbpp equals the brute-force estimator on random histories") {
    Rng rng(31337);
    for (int trial = 0; trial < 200; ++trial) {
        auto history = random_history(rng, rng.uniform_int(1, 10));

        TBPPVector got = estimate_tbpp(history, TbppNorm::per_skill_mean);
        auto want = oracle_mean(history);
        for (int i = 0; i < kNumSkills; ++i)
            CHECK(got[static_cast<std::size_t>(i)] == want[static_cast<std::size_t>(i)]);

        TBPPVector gmm = estimate_tbpp(history, TbppNorm::global_minmax);
        auto wmm = oracle_minmax(history);
        for (int i = 0; i < kNumSkills; ++i)
            CHECK(gmm[static_cast<std::size_t>(i)] ==
                  doctest::Approx(wmm[static_cast<std::size_t>(i)]).epsilon(1e-12));
    }
}

TEST_CASE("latent skills equal the mean of all final scores") {
    Rng rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        auto history = random_history(rng, rng.uniform_int(1, 12));
        double mean = 0;
        for (const auto& h : history) mean += h.final_score;
        mean /= static_cast<double>(history.size());
        TBPPVector t = estimate_tbpp(history);
        for (int i = kNumConcepts; i < kNumSkills; ++i)
            CHECK(std::abs(t[static_cast<std::size_t>(i)] - mean) < 1e-12);
    }
}

TEST_CASE("global_minmax maps a degenerate range to 0.5") {
    std::vector<HistoryOutcome> history(2);
    history[0].requirements.fill(1.0);
    history[0].final_score = 0.5;
    history[1].requirements.fill(1.0);
    history[1].final_score = 0.5;
    TBPPVector t = estimate_tbpp(history, TbppNorm::global_minmax);
    for (double v : t) CHECK(v == 0.5);
}

TEST_CASE("estimate_profile validates its inputs") {
    CHECK_THROWS_AS(estimate_profile({}, {}), EmptyHistory);

    // ragged columns
    CHECK_THROWS_AS(estimate_profile({{1, 0}, {1, 0, 1}}, {0.5, 0.5}), Error);
    // column/score count mismatch
    CHECK_THROWS_AS(estimate_profile({{1, 0}}, {0.5, 0.5}), Error);
    // non-binary requirement entry
    CHECK_THROWS_AS(estimate_profile({{0.3, 1}}, {0.5}), Error);
    // score outside [0, 1]
    CHECK_THROWS_AS(estimate_profile({{1, 0}}, {1.5}), Error);
    CHECK_THROWS_AS(estimate_profile({{1, 0}}, {-0.1}), Error);

    std::vector<double> p = estimate_profile({{1.0, 0.0}, {1.0, 1.0}}, {0.25, 0.75});
    REQUIRE(p.size() == 2);
    CHECK(p[0] == doctest::Approx(0.5));
    CHECK(p[1] == doctest::Approx(0.75));
}

TEST_CASE("estimate_tbpp rejects an empty history") {
    CHECK_THROWS_AS(estimate_tbpp({}), EmptyHistory);
}
