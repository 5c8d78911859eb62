#pragma once

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "ptm/model_input.hpp"

namespace ptm {

struct UnknownTaskId : Error {
    explicit UnknownTaskId(const std::string& task_id)
        : Error(ErrorCategory::input, "UNKNOWN_TASK_ID", "task id not in vocabulary: " + task_id) {}
};

// Knowledge-tracing baseline: embedded (task, struggled) interactions run
// through an LSTM; the final state is concatenated with the embedded target
// task id and mapped to a probability.
class DktModel : public StrugglePredictor {
public:
    DktModel(const TrainConfig& config, const std::vector<std::string>& task_vocab);

    const std::string& name() const override { return name_; }
    std::vector<LossTraceRow> fit(const std::vector<StudentExamples>& train,
                                  const Protocol& protocol, const FitOptions& options) override;
    std::vector<double> predict_targets(const StudentExamples& student, int context_len,
                                        const std::vector<int>& target_indices) override;
    std::size_t param_count() const override { return params_.param_count(); }
    const nn::ParamStore& params() const override { return params_; }

    double forward_value(const std::vector<std::pair<std::string, bool>>& interactions,
                         const std::string& target_task_id);

private:
    int task_index(const std::string& task_id) const;
    nn::Var context_state(nn::Tape& t, const std::vector<std::pair<int, bool>>& interactions);
    nn::Var head(nn::Tape& t, nn::Var state, int target_index);

    TrainConfig config_;
    std::string name_ = "dkt_target";
    std::map<std::string, int> vocab_;
    nn::ParamStore params_;
};

// Single-block self-attention baseline: the embedded target task queries
// the causally masked interaction sequence; residual + layernorm + FFN,
// then a linear head.
class SaktModel : public StrugglePredictor {
public:
    SaktModel(const TrainConfig& config, const std::vector<std::string>& task_vocab);

    const std::string& name() const override { return name_; }
    std::vector<LossTraceRow> fit(const std::vector<StudentExamples>& train,
                                  const Protocol& protocol, const FitOptions& options) override;
    std::vector<double> predict_targets(const StudentExamples& student, int context_len,
                                        const std::vector<int>& target_indices) override;
    std::size_t param_count() const override { return params_.param_count(); }
    const nn::ParamStore& params() const override { return params_; }

    // Only interactions before target_position are attended; anything at or
    // past that position never influences the output.
    double forward_value(const std::vector<std::pair<std::string, bool>>& interactions,
                         const std::string& target_task_id, int target_position);

private:
    int task_index(const std::string& task_id) const;
    struct KeysValues {
        std::vector<nn::Var> keys;
        std::vector<nn::Var> values;
    };
    KeysValues encode_context(nn::Tape& t, const std::vector<std::pair<int, bool>>& interactions,
                              int attend_len);
    nn::Var head(nn::Tape& t, const KeysValues& kv, int target_index);

    TrainConfig config_;
    std::string name_ = "sakt";
    std::map<std::string, int> vocab_;
    nn::ParamStore params_;
};

enum class AblationVariant { no_tax, no_tax_no_hist };

// PTM minus the taxonomy: history summary -> 10 unsupervised skill scores;
// those and the target task text go through separate MLPs combined by
// learned scalar weights. no_tax keeps per-task attempt sequences;
// no_tax_no_hist sees only each task's final submission.
class AblationModel : public StrugglePredictor {
public:
    AblationModel(const TrainConfig& config, int embed_dim, AblationVariant variant);

    const std::string& name() const override { return name_; }
    std::vector<LossTraceRow> fit(const std::vector<StudentExamples>& train,
                                  const Protocol& protocol, const FitOptions& options) override;
    std::vector<double> predict_targets(const StudentExamples& student, int context_len,
                                        const std::vector<int>& target_indices) override;
    std::size_t param_count() const override { return params_.param_count(); }
    const nn::ParamStore& params() const override { return params_; }

    AblationVariant variant() const { return variant_; }

private:
    nn::Var task_rep(nn::Tape& t, const TaskExample& ex);
    nn::Var skills(nn::Tape& t, const StudentExamples& student, int context_len);
    nn::Var head(nn::Tape& t, nn::Var skills10, const Embedding& task_text);

    TrainConfig config_;
    int embed_dim_;
    AblationVariant variant_;
    std::string name_;
    nn::ParamStore params_;
};

// name in {ptm, dkt_target, sakt, no_tax, no_tax_no_hist}.
std::unique_ptr<StrugglePredictor> make_model(const std::string& name, const TrainConfig& config,
                                              int embed_dim,
                                              const std::vector<std::string>& task_vocab);

}  // namespace ptm
