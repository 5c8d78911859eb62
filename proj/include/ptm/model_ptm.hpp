#pragma once

#include <array>
#include <string>
#include <vector>

#include "ptm/model_input.hpp"

namespace ptm {

struct EmptySequence : Error {
    EmptySequence() : Error(ErrorCategory::input, "EMPTY_SEQUENCE", "no attempts to encode") {}
};

struct LossBreakdown {
    double mae_term = 0;
    double bce_term = 0;
    double alpha = 0.5;
    double total = 0;
};

// L = alpha * MAE(tbpp_pred, tbpp_target) + (1 - alpha) * BCE(prob, label),
// with the probability clamped to [1e-7, 1-1e-7] inside the BCE.
LossBreakdown combined_loss(const TBPPVector& tbpp_pred, const TBPPVector& tbpp_target,
                            double struggle_prob, int label, double alpha);

// Multi-task model: per-task attempt LSTM -> Z sequence -> history LSTM ->
// 13-dim proficiency profile (supervised against the estimated profile),
// cross-attention of profile-scaled skill embeddings over per-skill
// projections of the target task text, a softplus skill-weight MLP over the
// requirement vector, and a final MLP emitting the struggle probability.
class PtmModel : public StrugglePredictor {
public:
    PtmModel(const TrainConfig& config, int embed_dim);

    const std::string& name() const override { return name_; }
    std::vector<LossTraceRow> fit(const std::vector<StudentExamples>& train,
                                  const Protocol& protocol, const FitOptions& options) override;
    std::vector<double> predict_targets(const StudentExamples& student, int context_len,
                                        const std::vector<int>& target_indices) override;
    std::size_t param_count() const override { return params_.param_count(); }
    const nn::ParamStore& params() const override { return params_; }
    nn::ParamStore& mutable_params() { return params_; }
    const TrainConfig& config() const { return config_; }

    struct EncodeStats {
        int attempts_seen = 0;
        int attempts_used = 0;
    };

    // Value-level entry points for the individual model stages.
    std::vector<double> encode_submissions(const std::vector<Embedding>& code_embeddings,
                                           bool struggled, EncodeStats* stats = nullptr);
    TBPPVector tbpp_head_value(const std::vector<std::vector<double>>& task_reps,
                               const std::string& student_id);
    double predict_struggle_value(const TBPPVector& tbpp, const Embedding& task_text,
                                  const RequirementVector& req);
    // Also returns d(prob)/d(tbpp_i) for all 13 entries.
    std::pair<double, std::array<double, kNumSkills>> predict_struggle_with_grad(
        const TBPPVector& tbpp, const Embedding& task_text, const RequirementVector& req);

    // Per-example training loss on a tape over this model's parameters;
    // used by the gradient-check tests.
    double example_loss_backward(const StudentExamples& student, int context_len, int target_index);

private:
    nn::Var encode_seq(nn::Tape& t, const std::vector<Embedding>& embeddings, bool struggled,
                       EncodeStats* stats);
    nn::Var tbpp_head(nn::Tape& t, const std::vector<nn::Var>& zs, const std::string& ref_name);
    nn::Var attention_weights(nn::Tape& t, nn::Var tbpp);
    nn::Var struggle_head(nn::Tape& t, nn::Var tbpp, nn::Var attn, const Embedding& task_text,
                          const RequirementVector& req);
    std::string student_ref_name(const std::string& student_id) const;

    TrainConfig config_;
    int embed_dim_;
    std::string name_ = "ptm";
    nn::ParamStore params_;
};

std::map<std::string, std::string> train_config_to_map(const TrainConfig& config);

}  // namespace ptm
