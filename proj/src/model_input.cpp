#include "ptm/model_input.hpp"

#include <algorithm>

namespace ptm {

void validate_train_config(const TrainConfig& config) {
    auto fail = [](const std::string& what) {
        throw Error(ErrorCategory::input, "INVALID_CONFIG", what);
    };
    if (config.hidden_size < 1) fail("hidden_size must be positive");
    if (config.epochs < 1) fail("epochs must be positive");
    if (!(config.learning_rate > 0)) fail("learning_rate must be positive");
    if (config.batch_size < 1) fail("batch_size must be positive");
    if (config.alpha < 0 || config.alpha > 1) fail("alpha must be in [0,1]");
    if (config.max_attempts_per_task < 1) fail("max_attempts_per_task must be positive");
    if (config.attn_dim < 1) fail("attn_dim must be positive");
    if (config.student_ref_dim < 1) fail("student_ref_dim must be positive");
}

std::optional<ProtocolView> protocol_view(int n_tasks, const Protocol& protocol) {
    if (protocol.context_tasks < 1 || protocol.max_targets < 1)
        throw Error(ErrorCategory::input, "INVALID_CONFIG", "protocol bounds must be positive");
    if (n_tasks <= protocol.context_tasks) return std::nullopt;
    ProtocolView view;
    view.context_len = protocol.context_tasks;
    int last = std::min(n_tasks, protocol.context_tasks + protocol.max_targets);
    for (int i = protocol.context_tasks; i < last; ++i) view.target_indices.push_back(i);
    return view;
}

std::vector<StudentExamples> build_student_examples(const Corpus& corpus,
                                                    const LabelingResult& labels,
                                                    const Encoder& encoder, EmbeddingCache& cache,
                                                    std::vector<std::string>* warnings) {
    std::vector<StudentExamples> out;
    for (const auto& student_id : corpus.students) {
        StudentHistory history = build_history(corpus, student_id);
        StudentExamples s;
        s.student_id = student_id;
        for (const auto& entry : history.entries) {
            TaskExample ex;
            ex.task_id = entry.task.task_id;
            ex.requirements = requirement_vector(entry.task);
            ex.task_text_embedding = embed_task_text(entry.task.prompt_text, encoder, cache, warnings);
            for (const auto& event : entry.events)
                ex.attempt_embeddings.push_back(embed_code(event.source_code, encoder, cache));
            ex.attempt_count = static_cast<int>(entry.events.size());
            const LabeledPair& pair = labels.pairs.at({student_id, entry.task.task_id});
            ex.final_score = pair.outcome.final_score;
            ex.struggled = pair.label.value;
            s.tasks.push_back(std::move(ex));
        }
        out.push_back(std::move(s));
    }
    std::sort(out.begin(), out.end(), [](const StudentExamples& a, const StudentExamples& b) {
        return a.student_id < b.student_id;
    });
    return out;
}

}  // namespace ptm
