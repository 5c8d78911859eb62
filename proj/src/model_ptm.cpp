#include "ptm/model_ptm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ptm/checkpoint.hpp"

namespace ptm {

namespace {

constexpr double kOovDropout = 0.1;
constexpr const char* kOovRefName = "student_emb.oov";

std::vector<double> to_doubles(const Embedding& e) {
    return std::vector<double>(e.begin(), e.end());
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

}  // namespace

LossBreakdown combined_loss(const TBPPVector& tbpp_pred, const TBPPVector& tbpp_target,
                            double struggle_prob, int label, double alpha) {
    LossBreakdown out;
    out.alpha = alpha;
    double acc = 0;
    for (int i = 0; i < kNumSkills; ++i)
        acc += std::fabs(tbpp_pred[static_cast<std::size_t>(i)] - tbpp_target[static_cast<std::size_t>(i)]);
    out.mae_term = acc / static_cast<double>(kNumSkills);
    double p = std::min(1.0 - nn::kBceEps, std::max(nn::kBceEps, struggle_prob));
    out.bce_term = label ? -std::log(p) : -std::log(1.0 - p);
    out.total = alpha * out.mae_term + (1.0 - alpha) * out.bce_term;
    return out;
}

std::map<std::string, std::string> train_config_to_map(const TrainConfig& config) {
    return {
        {"hidden_size", std::to_string(config.hidden_size)},
        {"epochs", std::to_string(config.epochs)},
        {"learning_rate", format_double(config.learning_rate)},
        {"batch_size", std::to_string(config.batch_size)},
        {"alpha", format_double(config.alpha)},
        {"max_attempts_per_task", std::to_string(config.max_attempts_per_task)},
        {"seed", std::to_string(config.seed)},
        {"attn_dim", std::to_string(config.attn_dim)},
        {"student_ref_dim", std::to_string(config.student_ref_dim)},
    };
}

PtmModel::PtmModel(const TrainConfig& config, int embed_dim)
    : config_(config), embed_dim_(embed_dim) {
    validate_train_config(config_);
    if (embed_dim_ < 1)
        throw Error(ErrorCategory::input, "INVALID_CONFIG", "embed_dim must be positive");
    const int h = config_.hidden_size;
    Rng rng(config_.seed);
    nn::ensure_lstm(params_, "sub_lstm", embed_dim_, h, rng);
    nn::ensure_linear(params_, "z_proj", h + embed_dim_ + 1, h, rng);
    nn::ensure_lstm(params_, "hist_lstm", h, h, rng);
    nn::ensure_linear(params_, "obs_head", 2 * h, kNumConcepts, rng);
    nn::ensure_linear(params_, "lat_head", kNumConcepts + config_.student_ref_dim,
                      kNumLatentSkills, rng);
    params_.ensure("attn.skill_emb", kNumSkills, config_.attn_dim, rng);
    for (int i = 0; i < kNumSkills; ++i)
        params_.ensure("attn.v_proj." + std::to_string(i), config_.attn_dim, embed_dim_, rng);
    nn::ensure_mlp(params_, "skill_w", kNumSkills, h, kNumSkills, rng);
    nn::ensure_mlp(params_, "struggle_head", config_.attn_dim + kNumSkills, h, 1, rng);
    params_.ensure(kOovRefName, config_.student_ref_dim, 1, rng, 0.1);
}

std::string PtmModel::student_ref_name(const std::string& student_id) const {
    std::string name = "student_emb.id." + student_id;
    return params_.has(name) ? name : kOovRefName;
}

nn::Var PtmModel::encode_seq(nn::Tape& t, const std::vector<Embedding>& embeddings, bool struggled,
                             EncodeStats* stats) {
    if (embeddings.empty()) throw EmptySequence();
    std::size_t max_n = static_cast<std::size_t>(config_.max_attempts_per_task);
    std::size_t start = embeddings.size() > max_n ? embeddings.size() - max_n : 0;
    std::vector<nn::Var> xs;
    for (std::size_t i = start; i < embeddings.size(); ++i)
        xs.push_back(t.constant(to_doubles(embeddings[i])));
    if (stats) {
        stats->attempts_seen += static_cast<int>(embeddings.size());
        stats->attempts_used += static_cast<int>(embeddings.size() - start);
    }
    nn::Var h = nn::lstm_sequence(t, "sub_lstm", xs, config_.hidden_size);
    nn::Var with_flag = t.concat(t.concat(h, mean_pool(t, xs)), t.scalar(struggled ? 1.0 : 0.0));
    return nn::linear(t, "z_proj", with_flag);
}

nn::Var PtmModel::tbpp_head(nn::Tape& t, const std::vector<nn::Var>& zs,
                            const std::string& ref_name) {
    if (zs.empty()) throw EmptyHistory();
    nn::Var u = nn::lstm_sequence(t, "hist_lstm", zs, config_.hidden_size);
    nn::Var obs = t.sigmoid(nn::linear(t, "obs_head", t.concat(u, mean_pool(t, zs))));
    nn::Var lat = t.sigmoid(nn::linear(t, "lat_head", t.concat(obs, t.param(ref_name))));
    return t.concat(obs, lat);
}

// Mean over the 13 query rows of the softmax attention matrix; queries and
// keys are the skill embeddings scaled by the matching profile entry, so
// the weights depend only on the profile and are shared by all targets.
nn::Var PtmModel::attention_weights(nn::Tape& t, nn::Var tbpp) {
    nn::Var emb = t.param("attn.skill_emb");
    std::vector<nn::Var> qk(kNumSkills);
    for (int i = 0; i < kNumSkills; ++i)
        qk[static_cast<std::size_t>(i)] = t.bmul(t.row(emb, i), t.slice(tbpp, i, 1));
    double scale = 1.0 / std::sqrt(static_cast<double>(config_.attn_dim));
    nn::Var acc{};
    for (int i = 0; i < kNumSkills; ++i) {
        nn::Var scores{};
        for (int j = 0; j < kNumSkills; ++j) {
            nn::Var d = t.dot(qk[static_cast<std::size_t>(i)], qk[static_cast<std::size_t>(j)]);
            scores = j == 0 ? d : t.concat(scores, d);
        }
        nn::Var row = t.softmax(t.affine(scores, scale, 0.0));
        acc = i == 0 ? row : t.add(acc, row);
    }
    return t.affine(acc, 1.0 / static_cast<double>(kNumSkills), 0.0);
}

nn::Var PtmModel::struggle_head(nn::Tape& t, nn::Var tbpp, nn::Var attn,
                                const Embedding& task_text, const RequirementVector& req) {
    nn::Var text = t.constant(to_doubles(task_text));
    nn::Var pooled{};
    for (int j = 0; j < kNumSkills; ++j) {
        nn::Var vj = t.matvec(t.param("attn.v_proj." + std::to_string(j)), text);
        nn::Var term = t.bmul(vj, t.slice(attn, j, 1));
        pooled = j == 0 ? term : t.add(pooled, term);
    }
    nn::Var w = t.softplus(nn::mlp(t, "skill_w", t.constant({req.begin(), req.end()})));
    nn::Var weighted = t.mul(w, tbpp);
    return t.sigmoid(nn::mlp(t, "struggle_head", t.concat(pooled, weighted)));
}

std::vector<LossTraceRow> PtmModel::fit(const std::vector<StudentExamples>& train,
                                        const Protocol& protocol, const FitOptions& options) {
    struct Item {
        const StudentExamples* student;
        ProtocolView view;
    };
    std::vector<Item> items;
    for (const auto& s : train) {
        auto view = protocol_view(static_cast<int>(s.tasks.size()), protocol);
        if (view) items.push_back({&s, *view});
    }
    if (items.empty())
        throw Error(ErrorCategory::input, "NO_ELIGIBLE_STUDENTS",
                    "no training student has more than " + std::to_string(protocol.context_tasks) +
                        " tasks");

    Rng emb_rng(config_.seed ^ 0x9E3779B97F4A7C15ULL);
    for (const auto& item : items)
        params_.ensure("student_emb.id." + item.student->student_id, config_.student_ref_dim, 1,
                       emb_rng, 0.1);

    Rng rng(config_.seed + 0x51F15EEDULL);
    std::vector<std::size_t> order(items.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    std::vector<LossTraceRow> trace;
    for (int epoch = 1; epoch <= config_.epochs; ++epoch) {
        rng.shuffle(order);
        params_.zero_grad();
        int batch_examples = 0;
        double mae_sum = 0, bce_sum = 0;
        std::size_t total_examples = 0;

        for (std::size_t idx : order) {
            const StudentExamples& s = *items[idx].student;
            const ProtocolView& view = items[idx].view;
            nn::Tape tape(params_);

            std::vector<nn::Var> zs;
            std::vector<HistoryOutcome> history;
            for (int i = 0; i < view.context_len; ++i) {
                const TaskExample& ex = s.tasks[static_cast<std::size_t>(i)];
                zs.push_back(encode_seq(tape, ex.attempt_embeddings, ex.struggled, nullptr));
                history.push_back({ex.requirements, ex.final_score});
            }

            bool use_oov = rng.uniform() < kOovDropout;
            std::string ref = use_oov ? kOovRefName : "student_emb.id." + s.student_id;
            nn::Var tbpp = tbpp_head(tape, zs, ref);
            nn::Var attn = attention_weights(tape, tbpp);

            TBPPVector target = estimate_tbpp(history);
            nn::Var mae = nn::mae_loss(tape, tbpp, {target.begin(), target.end()});

            nn::Var student_loss{};
            for (std::size_t k = 0; k < view.target_indices.size(); ++k) {
                const TaskExample& ex = s.tasks[static_cast<std::size_t>(view.target_indices[k])];
                nn::Var p = struggle_head(tape, tbpp, attn, ex.task_text_embedding, ex.requirements);
                nn::Var bce = nn::bce_loss(tape, p, ex.struggled ? 1.0 : 0.0);
                nn::Var example_loss = tape.add(tape.affine(mae, config_.alpha, 0.0),
                                                tape.affine(bce, 1.0 - config_.alpha, 0.0));
                student_loss = k == 0 ? example_loss : tape.add(student_loss, example_loss);
                bce_sum += tape.scalar_value(bce);
            }
            double n_targets = static_cast<double>(view.target_indices.size());
            mae_sum += tape.scalar_value(mae) * n_targets;

            if (!std::isfinite(tape.scalar_value(student_loss))) throw DivergenceDetected(epoch);
            tape.backward(student_loss);
            batch_examples += static_cast<int>(view.target_indices.size());
            total_examples += view.target_indices.size();

            if (batch_examples >= config_.batch_size) {
                params_.adam_step(config_.learning_rate, 1.0 / static_cast<double>(batch_examples));
                params_.zero_grad();
                batch_examples = 0;
            }
        }
        if (batch_examples > 0) {
            params_.adam_step(config_.learning_rate, 1.0 / static_cast<double>(batch_examples));
            params_.zero_grad();
        }

        LossTraceRow row;
        row.epoch = epoch;
        row.mae = mae_sum / static_cast<double>(total_examples);
        row.bce = bce_sum / static_cast<double>(total_examples);
        row.total = config_.alpha * row.mae + (1.0 - config_.alpha) * row.bce;
        if (!std::isfinite(row.total)) throw DivergenceDetected(epoch);
        trace.push_back(row);

        if (!options.checkpoint_dir.empty() && (options.every_epoch || epoch == config_.epochs)) {
            CheckpointMeta meta{train_config_to_map(config_), config_.seed, name_};
            save_checkpoint(options.checkpoint_dir + "/" + name_ + "_epoch_" +
                                std::to_string(epoch) + ".ptmc",
                            params_, meta);
        }
    }
    return trace;
}

std::vector<double> PtmModel::predict_targets(const StudentExamples& student, int context_len,
                                              const std::vector<int>& target_indices) {
    context_len = std::min(context_len, static_cast<int>(student.tasks.size()));
    if (context_len < 1) throw EmptyHistory();
    nn::Tape tape(params_);
    std::vector<nn::Var> zs;
    for (int i = 0; i < context_len; ++i) {
        const TaskExample& ex = student.tasks[static_cast<std::size_t>(i)];
        zs.push_back(encode_seq(tape, ex.attempt_embeddings, ex.struggled, nullptr));
    }
    nn::Var tbpp = tbpp_head(tape, zs, student_ref_name(student.student_id));
    nn::Var attn = attention_weights(tape, tbpp);
    std::vector<double> out;
    for (int j : target_indices) {
        const TaskExample& ex = student.tasks.at(static_cast<std::size_t>(j));
        nn::Var p = struggle_head(tape, tbpp, attn, ex.task_text_embedding, ex.requirements);
        out.push_back(tape.scalar_value(p));
    }
    return out;
}

std::vector<double> PtmModel::encode_submissions(const std::vector<Embedding>& code_embeddings,
                                                 bool struggled, EncodeStats* stats) {
    nn::Tape tape(params_);
    nn::Var z = encode_seq(tape, code_embeddings, struggled, stats);
    return tape.value(z);
}

TBPPVector PtmModel::tbpp_head_value(const std::vector<std::vector<double>>& task_reps,
                                     const std::string& student_id) {
    nn::Tape tape(params_);
    std::vector<nn::Var> zs;
    for (const auto& rep : task_reps) zs.push_back(tape.constant(rep));
    nn::Var tbpp = tbpp_head(tape, zs, student_ref_name(student_id));
    TBPPVector out{};
    const auto& v = tape.value(tbpp);
    std::copy(v.begin(), v.end(), out.begin());
    return out;
}

double PtmModel::predict_struggle_value(const TBPPVector& tbpp, const Embedding& task_text,
                                        const RequirementVector& req) {
    nn::Tape tape(params_);
    nn::Var tv = tape.constant({tbpp.begin(), tbpp.end()});
    nn::Var p = struggle_head(tape, tv, attention_weights(tape, tv), task_text, req);
    return tape.scalar_value(p);
}

std::pair<double, std::array<double, kNumSkills>> PtmModel::predict_struggle_with_grad(
    const TBPPVector& tbpp, const Embedding& task_text, const RequirementVector& req) {
    nn::Tape tape(params_);
    nn::Var tv = tape.constant({tbpp.begin(), tbpp.end()});
    nn::Var p = struggle_head(tape, tv, attention_weights(tape, tv), task_text, req);
    double prob = tape.scalar_value(p);
    params_.zero_grad();
    tape.backward(p);
    params_.zero_grad();
    std::array<double, kNumSkills> grad{};
    const auto& g = tape.grad(tv);
    std::copy(g.begin(), g.end(), grad.begin());
    return {prob, grad};
}

double PtmModel::example_loss_backward(const StudentExamples& student, int context_len,
                                       int target_index) {
    params_.zero_grad();
    nn::Tape tape(params_);
    std::vector<nn::Var> zs;
    std::vector<HistoryOutcome> history;
    for (int i = 0; i < context_len; ++i) {
        const TaskExample& ex = student.tasks.at(static_cast<std::size_t>(i));
        zs.push_back(encode_seq(tape, ex.attempt_embeddings, ex.struggled, nullptr));
        history.push_back({ex.requirements, ex.final_score});
    }
    nn::Var tbpp = tbpp_head(tape, zs, student_ref_name(student.student_id));
    nn::Var attn = attention_weights(tape, tbpp);
    TBPPVector target = estimate_tbpp(history);
    nn::Var mae = nn::mae_loss(tape, tbpp, {target.begin(), target.end()});
    const TaskExample& ex = student.tasks.at(static_cast<std::size_t>(target_index));
    nn::Var p = struggle_head(tape, tbpp, attn, ex.task_text_embedding, ex.requirements);
    nn::Var bce = nn::bce_loss(tape, p, ex.struggled ? 1.0 : 0.0);
    nn::Var loss = tape.add(tape.affine(mae, config_.alpha, 0.0),
                            tape.affine(bce, 1.0 - config_.alpha, 0.0));
    tape.backward(loss);
    return tape.scalar_value(loss);
}

}  // namespace ptm
