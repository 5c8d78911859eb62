#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ptm/corpus.hpp"
#include "ptm/encoders.hpp"
#include "ptm/errors.hpp"
#include "ptm/labeling.hpp"
#include "ptm/nn.hpp"
#include "ptm/tbpp.hpp"

namespace ptm {

struct TrainConfig {
    int hidden_size = 512;
    int epochs = 15;
    double learning_rate = 0.0001;
    int batch_size = 32;
    double alpha = 0.5;
    int max_attempts_per_task = 100;
    std::uint64_t seed = 0;
    // implementation knobs (not from the reference setup)
    int attn_dim = 32;         // per-skill embedding width in the attention head
    int student_ref_dim = 16;  // student reference embedding width
};

void validate_train_config(const TrainConfig& config);

// Context/target split per student: the first context_tasks tasks are
// observed history, the next up-to-max_targets tasks are prediction targets.
// Students without at least one target are excluded.
struct Protocol {
    int context_tasks = 30;
    int max_targets = 20;
};

struct ProtocolView {
    int context_len = 0;
    std::vector<int> target_indices;
};

std::optional<ProtocolView> protocol_view(int n_tasks, const Protocol& protocol);

struct DivergenceDetected : Error {
    explicit DivergenceDetected(int epoch)
        : Error(ErrorCategory::training, "DIVERGENCE",
                "non-finite loss at epoch " + std::to_string(epoch)) {}
};

// One history task from a model's point of view, in student history order.
struct TaskExample {
    std::string task_id;
    std::vector<Embedding> attempt_embeddings;  // all attempts, oldest first
    Embedding task_text_embedding;
    RequirementVector requirements{};
    double final_score = 0;
    int attempt_count = 0;
    bool struggled = false;
};

struct StudentExamples {
    std::string student_id;
    std::vector<TaskExample> tasks;
};

// Embeds every attempt and prompt (through the cache) and attaches labels
// and requirement vectors. Sorted by student_id. The corpus must already be
// labeled (canonical_concepts filled).
std::vector<StudentExamples> build_student_examples(const Corpus& corpus,
                                                    const LabelingResult& labels,
                                                    const Encoder& encoder, EmbeddingCache& cache,
                                                    std::vector<std::string>* warnings = nullptr);

struct LossTraceRow {
    int epoch = 0;
    double mae = 0;
    double bce = 0;
    double total = 0;
};

struct FitOptions {
    std::string checkpoint_dir;  // empty: no checkpoints
    bool every_epoch = false;    // false: only the final epoch is written
};

// Common contract for PTM, the baselines, and the ablations: fit on
// training students, then predict struggle probabilities for a student's
// target tasks given the first context_len tasks as history.
class StrugglePredictor {
public:
    virtual ~StrugglePredictor() = default;
    virtual const std::string& name() const = 0;
    virtual std::vector<LossTraceRow> fit(const std::vector<StudentExamples>& train,
                                          const Protocol& protocol,
                                          const FitOptions& options = {}) = 0;
    virtual std::vector<double> predict_targets(const StudentExamples& student, int context_len,
                                                const std::vector<int>& target_indices) = 0;
    virtual std::size_t param_count() const = 0;
    virtual const nn::ParamStore& params() const = 0;
};

}  // namespace ptm
