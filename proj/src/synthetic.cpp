#include "ptm/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "ptm/rng.hpp"

namespace ptm {

namespace {

constexpr std::int64_t kBaseTimestamp = 1600000000;
constexpr double kPromptMentionRate = 0.6;
constexpr double kPromptDecoyRate = 0.04;
constexpr double kFailedTestsModeRate = 0.7;

// Raw dataset-style tags per canonical concept; the shipped concept map
// folds these back onto the canonical set.
const std::array<std::vector<std::string>, kNumConcepts> kRawVariants = {{
    {"If", "IfElse", "Conditional"},
    {"ForLoop", "WhileLoop", "NestedLoop"},
    {"Arithmetic", "MathOps", "Modulo"},
    {"BooleanLogic", "LogicalOperators"},
    {"StringFormat", "StringMethods", "Substring"},
    {"Lists", "ListComprehension"},
    {"FileIO", "FileRead", "FileWrite"},
    {"Functions", "MethodDecomposition"},
    {"Dictionaries", "HashMap", "KeyValue"},
    {"Tuples", "Pairs"},
}};

const std::array<std::string, kNumConcepts> kPromptPhrases = {
    "conditional branching",  "a loop",              "arithmetic operations",
    "boolean logic",          "string manipulation", "working with lists",
    "reading from a file",    "defining a function", "using a dictionary",
    "returning a tuple",
};

const std::array<std::string, kNumConcepts> kCodeSnippets = {
    "if x > y:\n    x = y\nelse:\n    y = x",
    "for item in range(count):\n    print(item)",
    "total = base + rate * 2",
    "valid = ready and not done",
    "label = text.strip().upper()",
    "values = list()\nvalues.append(value)",
    "with open(path) as handle:\n    body = handle.read()",
    "def helper(value):\n    return value",
    "lookup = dict()\nlookup[key] = entry",
    "pair = tuple((left, right))",
};

const std::array<std::string, 5> kFillerLines = {
    "x = 1", "value = x", "print(value)", "result = value", "temp = result",
};

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream));
}

void validate(const SyntheticConfig& c) {
    if (c.n_students < 1 || c.n_students > 99999)
        throw InvalidConfig("n_students must be in 1..99999");
    if (c.n_tasks < 1 || c.n_tasks > 999) throw InvalidConfig("n_tasks must be in 1..999");
    if (!(c.skill_alpha > 0) || !(c.skill_beta > 0))
        throw InvalidConfig("skill distribution parameters must be positive");
    if (c.fixed_skill && (*c.fixed_skill < 0 || *c.fixed_skill > 1))
        throw InvalidConfig("fixed_skill must be in [0,1]");
    if (c.noise_rate < 0 || c.noise_rate > 1) throw InvalidConfig("noise_rate must be in [0,1]");
    if (c.struggle_scale < 0 || c.struggle_scale > 1)
        throw InvalidConfig("struggle_scale must be in [0,1]");
    if (!(c.struggle_shape > 0)) throw InvalidConfig("struggle_shape must be positive");
    if (c.max_extra_attempts < 1) throw InvalidConfig("max_extra_attempts must be >= 1");
    if (c.min_concepts_per_task < 1 || c.max_concepts_per_task < c.min_concepts_per_task ||
        c.max_concepts_per_task > kNumConcepts)
        throw InvalidConfig("concepts-per-task bounds invalid");
    if (c.tests_min < 1 || c.tests_max < c.tests_min) throw InvalidConfig("tests bounds invalid");
}

std::string format_id(const char* prefix, int width, int n) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%0*d", prefix, width, n);
    return buf;
}

struct TaskPlan {
    TaskSpec spec;
    std::vector<int> required;  // canonical concept indices
    int tests_total = 0;
};

std::vector<TaskPlan> plan_tasks(const SyntheticConfig& c, Rng& rng) {
    std::vector<TaskPlan> plans;
    for (int t = 0; t < c.n_tasks; ++t) {
        TaskPlan plan;
        plan.spec.task_id = format_id("t", 3, t + 1);
        plan.spec.ordinal = t;
        plan.tests_total = rng.uniform_int(c.tests_min, c.tests_max);

        int n_concepts = rng.uniform_int(c.min_concepts_per_task, c.max_concepts_per_task);
        std::vector<int> pool(kNumConcepts);
        for (int i = 0; i < kNumConcepts; ++i) pool[i] = i;
        rng.shuffle(pool);
        plan.required.assign(pool.begin(), pool.begin() + n_concepts);
        std::sort(plan.required.begin(), plan.required.end());

        for (int ci : plan.required) {
            const auto& variants = kRawVariants[static_cast<std::size_t>(ci)];
            plan.spec.raw_concepts.push_back(
                variants[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(variants.size()) - 1))]);
        }

        std::string prompt = "Exercise " + plan.spec.task_id +
                             ". Write a Python program that solves the posed problem.";
        for (int ci : plan.required) {
            if (rng.uniform() < kPromptMentionRate)
                prompt += " The solution should involve " + kPromptPhrases[static_cast<std::size_t>(ci)] + ".";
        }
        for (int ci = 0; ci < kNumConcepts; ++ci) {
            if (std::find(plan.required.begin(), plan.required.end(), ci) != plan.required.end())
                continue;
            if (rng.uniform() < kPromptDecoyRate)
                prompt += " It may also touch on " + kPromptPhrases[static_cast<std::size_t>(ci)] + ".";
        }
        plan.spec.prompt_text = prompt;
        plans.push_back(std::move(plan));
    }
    return plans;
}

std::string make_code(const std::vector<int>& required, const std::vector<double>& skills,
                      int attempt, int total_attempts, bool accepted, Rng& rng) {
    std::vector<std::string> lines;
    lines.push_back(kFillerLines[static_cast<std::size_t>(rng.uniform_int(0, 4))]);
    int extra_filler = rng.uniform_int(0, 2);
    for (int i = 0; i < extra_filler; ++i)
        lines.push_back(kFillerLines[static_cast<std::size_t>(rng.uniform_int(0, 4))]);
    double progress = static_cast<double>(attempt) / static_cast<double>(total_attempts);
    for (int ci : required) {
        // An accepted solution exercises every required concept; what varies
        // between students is the path of partial drafts leading up to it.
        double q = accepted ? 1.0 : 0.15 + 0.6 * skills[static_cast<std::size_t>(ci)] + 0.2 * progress;
        if (rng.uniform() < std::min(1.0, q))
            lines.push_back(kCodeSnippets[static_cast<std::size_t>(ci)]);
    }
    std::string out;
    for (const auto& l : lines) {
        if (!out.empty()) out += "\n";
        out += l;
    }
    return out;
}

}  // namespace

SyntheticResult generate_synthetic_corpus(const SyntheticConfig& config) {
    validate(config);
    SyntheticResult result;

    Rng task_rng(sub_seed(config.seed, 0));
    std::vector<TaskPlan> plans = plan_tasks(config, task_rng);
    for (const auto& p : plans) result.corpus.tasks.emplace(p.spec.task_id, p.spec);

    for (int s = 0; s < config.n_students; ++s) {
        std::string student_id = format_id("s", 5, s + 1);
        Rng rng(sub_seed(config.seed, 1 + static_cast<std::uint64_t>(s)));

        std::vector<double> skills(kNumConcepts);
        for (int i = 0; i < kNumConcepts; ++i)
            skills[static_cast<std::size_t>(i)] =
                config.fixed_skill ? *config.fixed_skill : rng.beta(config.skill_alpha, config.skill_beta);

        for (int t = 0; t < config.n_tasks; ++t) {
            const TaskPlan& plan = plans[static_cast<std::size_t>(t)];
            double mastery = 0;
            for (int ci : plan.required) mastery += skills[static_cast<std::size_t>(ci)];
            mastery /= static_cast<double>(plan.required.size());

            double p_struggle = config.struggle_scale * std::pow(1.0 - mastery, config.struggle_shape);
            bool struggles = rng.bernoulli(p_struggle);
            if (rng.bernoulli(config.noise_rate)) struggles = !struggles;

            bool fails_final = false;
            int attempts;
            if (!struggles) {
                attempts = 1 + rng.binomial(2, 0.35 * (1.0 - mastery));
            } else if (rng.bernoulli(kFailedTestsModeRate)) {
                fails_final = true;
                attempts = 2 + rng.binomial(config.max_extra_attempts, 0.5);
            } else {
                attempts = 2 + config.max_extra_attempts + rng.uniform_int(0, config.max_extra_attempts);
            }

            int final_passed = fails_final ? rng.uniform_int(0, plan.tests_total - 1) : plan.tests_total;
            for (int a = 1; a <= attempts; ++a) {
                SubmissionEvent e;
                e.student_id = student_id;
                e.task_id = plan.spec.task_id;
                e.attempt_index = a;
                e.timestamp = kBaseTimestamp + static_cast<std::int64_t>(s) * 10000000 +
                              static_cast<std::int64_t>(t) * 10000 + static_cast<std::int64_t>(a) * 10;
                e.tests_total = plan.tests_total;
                e.tests_passed = (a == attempts)
                                     ? final_passed
                                     : std::min(final_passed,
                                                static_cast<int>(std::floor(
                                                    static_cast<double>(final_passed) *
                                                    static_cast<double>(a) / static_cast<double>(attempts))));
                e.source_code =
                    make_code(plan.required, skills, a, attempts, a == attempts && !fails_final, rng);
                result.corpus.events.push_back(std::move(e));
            }
        }
        result.corpus.students.insert(student_id);
        result.skills.emplace(std::move(student_id), std::move(skills));
    }
    return result;
}

}  // namespace ptm
