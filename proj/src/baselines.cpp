#include "ptm/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ptm/checkpoint.hpp"
#include "ptm/model_ptm.hpp"

namespace ptm {

namespace {

constexpr int kMaxPositions = 128;

std::vector<double> to_doubles(const Embedding& e) {
    return std::vector<double>(e.begin(), e.end());
}

std::map<std::string, int> build_vocab(const std::vector<std::string>& task_vocab) {
    std::map<std::string, int> vocab;
    for (const auto& id : task_vocab) vocab.emplace(id, 0);
    int next = 0;
    for (auto& [id, index] : vocab) index = next++;
    return vocab;
}

int lookup(const std::map<std::string, int>& vocab, const std::string& task_id) {
    auto it = vocab.find(task_id);
    if (it == vocab.end()) throw UnknownTaskId(task_id);
    return it->second;
}

struct FitItem {
    const StudentExamples* student;
    ProtocolView view;
};

std::vector<FitItem> eligible_items(const std::vector<StudentExamples>& train,
                                    const Protocol& protocol) {
    std::vector<FitItem> items;
    for (const auto& s : train) {
        auto view = protocol_view(static_cast<int>(s.tasks.size()), protocol);
        if (view) items.push_back({&s, *view});
    }
    if (items.empty())
        throw Error(ErrorCategory::input, "NO_ELIGIBLE_STUDENTS",
                    "no training student has more than " + std::to_string(protocol.context_tasks) +
                        " tasks");
    return items;
}

// Shared epoch loop for the BCE-only models. student_loss must return the
// sum of the per-target BCE terms and add each term's value to bce_sum.
template <typename StudentLoss>
std::vector<LossTraceRow> bce_fit(nn::ParamStore& params, const TrainConfig& config,
                                  const std::string& model_name,
                                  const std::vector<StudentExamples>& train,
                                  const Protocol& protocol, const FitOptions& options,
                                  StudentLoss&& student_loss) {
    auto items = eligible_items(train, protocol);
    Rng rng(config.seed + 0x51F15EEDULL);
    std::vector<std::size_t> order(items.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    std::vector<LossTraceRow> trace;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        rng.shuffle(order);
        params.zero_grad();
        int batch_examples = 0;
        double bce_sum = 0;
        std::size_t total_examples = 0;

        for (std::size_t idx : order) {
            const StudentExamples& s = *items[idx].student;
            const ProtocolView& view = items[idx].view;
            nn::Tape tape(params);
            nn::Var loss = student_loss(tape, s, view, bce_sum);
            if (!std::isfinite(tape.scalar_value(loss))) throw DivergenceDetected(epoch);
            tape.backward(loss);
            batch_examples += static_cast<int>(view.target_indices.size());
            total_examples += view.target_indices.size();

            if (batch_examples >= config.batch_size) {
                params.adam_step(config.learning_rate, 1.0 / static_cast<double>(batch_examples));
                params.zero_grad();
                batch_examples = 0;
            }
        }
        if (batch_examples > 0) {
            params.adam_step(config.learning_rate, 1.0 / static_cast<double>(batch_examples));
            params.zero_grad();
        }

        LossTraceRow row;
        row.epoch = epoch;
        row.bce = bce_sum / static_cast<double>(total_examples);
        row.total = row.bce;
        if (!std::isfinite(row.total)) throw DivergenceDetected(epoch);
        trace.push_back(row);

        if (!options.checkpoint_dir.empty() && (options.every_epoch || epoch == config.epochs)) {
            CheckpointMeta meta{train_config_to_map(config), config.seed, model_name};
            save_checkpoint(options.checkpoint_dir + "/" + model_name + "_epoch_" +
                                std::to_string(epoch) + ".ptmc",
                            params, meta);
        }
    }
    return trace;
}

}  // namespace

DktModel::DktModel(const TrainConfig& config, const std::vector<std::string>& task_vocab)
    : config_(config), vocab_(build_vocab(task_vocab)) {
    validate_train_config(config_);
    if (vocab_.empty())
        throw Error(ErrorCategory::input, "INVALID_CONFIG", "task vocabulary is empty");
    const int h = config_.hidden_size;
    const int n = static_cast<int>(vocab_.size());
    Rng rng(config_.seed);
    params_.ensure("inter_emb", 2 * n, h, rng);
    params_.ensure("task_emb", n, h, rng);
    nn::ensure_lstm(params_, "lstm", h, h, rng);
    nn::ensure_linear(params_, "out", 2 * h, 1, rng);
}

int DktModel::task_index(const std::string& task_id) const { return lookup(vocab_, task_id); }

nn::Var DktModel::context_state(nn::Tape& t, const std::vector<std::pair<int, bool>>& interactions) {
    if (interactions.empty()) throw EmptyHistory();
    nn::Var emb = t.param("inter_emb");
    std::vector<nn::Var> xs;
    for (const auto& [index, struggled] : interactions)
        xs.push_back(t.row(emb, index * 2 + (struggled ? 1 : 0)));
    return nn::lstm_sequence(t, "lstm", xs, config_.hidden_size);
}

nn::Var DktModel::head(nn::Tape& t, nn::Var state, int target_index) {
    nn::Var target = t.row(t.param("task_emb"), target_index);
    return t.sigmoid(nn::linear(t, "out", t.concat(state, target)));
}

std::vector<LossTraceRow> DktModel::fit(const std::vector<StudentExamples>& train,
                                        const Protocol& protocol, const FitOptions& options) {
    return bce_fit(params_, config_, name_, train, protocol, options,
                   [this](nn::Tape& tape, const StudentExamples& s, const ProtocolView& view,
                          double& bce_sum) {
                       std::vector<std::pair<int, bool>> interactions;
                       for (int i = 0; i < view.context_len; ++i) {
                           const TaskExample& ex = s.tasks[static_cast<std::size_t>(i)];
                           interactions.emplace_back(task_index(ex.task_id), ex.struggled);
                       }
                       nn::Var state = context_state(tape, interactions);
                       nn::Var loss{};
                       for (std::size_t k = 0; k < view.target_indices.size(); ++k) {
                           const TaskExample& ex =
                               s.tasks[static_cast<std::size_t>(view.target_indices[k])];
                           nn::Var p = head(tape, state, task_index(ex.task_id));
                           nn::Var bce = nn::bce_loss(tape, p, ex.struggled ? 1.0 : 0.0);
                           loss = k == 0 ? bce : tape.add(loss, bce);
                           bce_sum += tape.scalar_value(bce);
                       }
                       return loss;
                   });
}

std::vector<double> DktModel::predict_targets(const StudentExamples& student, int context_len,
                                              const std::vector<int>& target_indices) {
    context_len = std::min(context_len, static_cast<int>(student.tasks.size()));
    if (context_len < 1) throw EmptyHistory();
    nn::Tape tape(params_);
    std::vector<std::pair<int, bool>> interactions;
    for (int i = 0; i < context_len; ++i) {
        const TaskExample& ex = student.tasks[static_cast<std::size_t>(i)];
        interactions.emplace_back(task_index(ex.task_id), ex.struggled);
    }
    nn::Var state = context_state(tape, interactions);
    std::vector<double> out;
    for (int j : target_indices) {
        const TaskExample& ex = student.tasks.at(static_cast<std::size_t>(j));
        out.push_back(tape.scalar_value(head(tape, state, task_index(ex.task_id))));
    }
    return out;
}

double DktModel::forward_value(const std::vector<std::pair<std::string, bool>>& interactions,
                               const std::string& target_task_id) {
    nn::Tape tape(params_);
    std::vector<std::pair<int, bool>> indexed;
    for (const auto& [id, struggled] : interactions)
        indexed.emplace_back(task_index(id), struggled);
    nn::Var state = context_state(tape, indexed);
    return tape.scalar_value(head(tape, state, task_index(target_task_id)));
}

SaktModel::SaktModel(const TrainConfig& config, const std::vector<std::string>& task_vocab)
    : config_(config), vocab_(build_vocab(task_vocab)) {
    validate_train_config(config_);
    if (vocab_.empty())
        throw Error(ErrorCategory::input, "INVALID_CONFIG", "task vocabulary is empty");
    const int h = config_.hidden_size;
    const int n = static_cast<int>(vocab_.size());
    Rng rng(config_.seed);
    params_.ensure("inter_emb", 2 * n, h, rng);
    params_.ensure("task_emb", n, h, rng);
    params_.ensure("pos_emb", kMaxPositions, h, rng);
    nn::ensure_linear(params_, "wq", h, h, rng);
    nn::ensure_linear(params_, "wk", h, h, rng);
    nn::ensure_linear(params_, "wv", h, h, rng);
    nn::ensure_layer_norm(params_, "ln1", h, rng);
    nn::ensure_mlp(params_, "ffn", h, h, h, rng);
    nn::ensure_layer_norm(params_, "ln2", h, rng);
    nn::ensure_linear(params_, "out", h, 1, rng);
}

int SaktModel::task_index(const std::string& task_id) const { return lookup(vocab_, task_id); }

SaktModel::KeysValues SaktModel::encode_context(
    nn::Tape& t, const std::vector<std::pair<int, bool>>& interactions, int attend_len) {
    int n = std::min<int>(attend_len, static_cast<int>(interactions.size()));
    if (n < 1) throw EmptyHistory();
    nn::Var inter = t.param("inter_emb");
    nn::Var pos = t.param("pos_emb");
    KeysValues kv;
    for (int j = 0; j < n; ++j) {
        const auto& [index, struggled] = interactions[static_cast<std::size_t>(j)];
        nn::Var x = t.add(t.row(inter, index * 2 + (struggled ? 1 : 0)),
                          t.row(pos, std::min(j, kMaxPositions - 1)));
        kv.keys.push_back(nn::linear(t, "wk", x));
        kv.values.push_back(nn::linear(t, "wv", x));
    }
    return kv;
}

nn::Var SaktModel::head(nn::Tape& t, const KeysValues& kv, int target_index) {
    nn::Var q = nn::linear(t, "wq", t.row(t.param("task_emb"), target_index));
    nn::Var scores{};
    for (std::size_t j = 0; j < kv.keys.size(); ++j) {
        nn::Var d = t.dot(q, kv.keys[j]);
        scores = j == 0 ? d : t.concat(scores, d);
    }
    double scale = 1.0 / std::sqrt(static_cast<double>(config_.hidden_size));
    nn::Var attn = t.softmax(t.affine(scores, scale, 0.0));
    nn::Var ctx{};
    for (std::size_t j = 0; j < kv.values.size(); ++j) {
        nn::Var term = t.bmul(kv.values[j], t.slice(attn, static_cast<int>(j), 1));
        ctx = j == 0 ? term : t.add(ctx, term);
    }
    nn::Var h1 = nn::layer_norm(t, "ln1", t.add(ctx, q));
    nn::Var h2 = nn::layer_norm(t, "ln2", t.add(h1, nn::mlp(t, "ffn", h1)));
    return t.sigmoid(nn::linear(t, "out", h2));
}

std::vector<LossTraceRow> SaktModel::fit(const std::vector<StudentExamples>& train,
                                         const Protocol& protocol, const FitOptions& options) {
    return bce_fit(params_, config_, name_, train, protocol, options,
                   [this](nn::Tape& tape, const StudentExamples& s, const ProtocolView& view,
                          double& bce_sum) {
                       std::vector<std::pair<int, bool>> interactions;
                       for (int i = 0; i < view.context_len; ++i) {
                           const TaskExample& ex = s.tasks[static_cast<std::size_t>(i)];
                           interactions.emplace_back(task_index(ex.task_id), ex.struggled);
                       }
                       KeysValues kv = encode_context(tape, interactions, view.context_len);
                       nn::Var loss{};
                       for (std::size_t k = 0; k < view.target_indices.size(); ++k) {
                           const TaskExample& ex =
                               s.tasks[static_cast<std::size_t>(view.target_indices[k])];
                           nn::Var p = head(tape, kv, task_index(ex.task_id));
                           nn::Var bce = nn::bce_loss(tape, p, ex.struggled ? 1.0 : 0.0);
                           loss = k == 0 ? bce : tape.add(loss, bce);
                           bce_sum += tape.scalar_value(bce);
                       }
                       return loss;
                   });
}

std::vector<double> SaktModel::predict_targets(const StudentExamples& student, int context_len,
                                               const std::vector<int>& target_indices) {
    context_len = std::min(context_len, static_cast<int>(student.tasks.size()));
    if (context_len < 1) throw EmptyHistory();
    nn::Tape tape(params_);
    std::vector<std::pair<int, bool>> interactions;
    for (int i = 0; i < context_len; ++i) {
        const TaskExample& ex = student.tasks[static_cast<std::size_t>(i)];
        interactions.emplace_back(task_index(ex.task_id), ex.struggled);
    }
    KeysValues kv = encode_context(tape, interactions, context_len);
    std::vector<double> out;
    for (int j : target_indices) {
        const TaskExample& ex = student.tasks.at(static_cast<std::size_t>(j));
        out.push_back(tape.scalar_value(head(tape, kv, task_index(ex.task_id))));
    }
    return out;
}

double SaktModel::forward_value(const std::vector<std::pair<std::string, bool>>& interactions,
                                const std::string& target_task_id, int target_position) {
    nn::Tape tape(params_);
    std::vector<std::pair<int, bool>> indexed;
    for (const auto& [id, struggled] : interactions)
        indexed.emplace_back(task_index(id), struggled);
    KeysValues kv = encode_context(tape, indexed, target_position);
    return tape.scalar_value(head(tape, kv, task_index(target_task_id)));
}

AblationModel::AblationModel(const TrainConfig& config, int embed_dim, AblationVariant variant)
    : config_(config),
      embed_dim_(embed_dim),
      variant_(variant),
      name_(variant == AblationVariant::no_tax ? "no_tax" : "no_tax_no_hist") {
    validate_train_config(config_);
    if (embed_dim_ < 1)
        throw Error(ErrorCategory::input, "INVALID_CONFIG", "embed_dim must be positive");
    const int h = config_.hidden_size;
    Rng rng(config_.seed);
    if (variant_ == AblationVariant::no_tax) {
        nn::ensure_lstm(params_, "sub_lstm", embed_dim_, h, rng);
        nn::ensure_linear(params_, "z_proj", h + 1, h, rng);
    } else {
        nn::ensure_linear(params_, "z_proj", embed_dim_ + 1, h, rng);
    }
    nn::ensure_lstm(params_, "hist_lstm", h, h, rng);
    nn::ensure_linear(params_, "obs_head", h, kNumConcepts, rng);
    nn::ensure_mlp(params_, "head_skills", kNumConcepts, h, h, rng);
    nn::ensure_mlp(params_, "head_text", embed_dim_, h, h, rng);
    params_.ensure("mix.wa", 1, 1, rng, 0.0).value[0] = 0.5;
    params_.ensure("mix.wb", 1, 1, rng, 0.0).value[0] = 0.5;
    nn::ensure_linear(params_, "out", h, 1, rng);
}

nn::Var AblationModel::task_rep(nn::Tape& t, const TaskExample& ex) {
    if (ex.attempt_embeddings.empty()) throw EmptySequence();
    nn::Var flag = t.scalar(ex.struggled ? 1.0 : 0.0);
    if (variant_ == AblationVariant::no_tax) {
        std::size_t max_n = static_cast<std::size_t>(config_.max_attempts_per_task);
        std::size_t start =
            ex.attempt_embeddings.size() > max_n ? ex.attempt_embeddings.size() - max_n : 0;
        std::vector<nn::Var> xs;
        for (std::size_t i = start; i < ex.attempt_embeddings.size(); ++i)
            xs.push_back(t.constant(to_doubles(ex.attempt_embeddings[i])));
        nn::Var h = nn::lstm_sequence(t, "sub_lstm", xs, config_.hidden_size);
        return nn::linear(t, "z_proj", t.concat(h, flag));
    }
    nn::Var final_emb = t.constant(to_doubles(ex.attempt_embeddings.back()));
    return nn::linear(t, "z_proj", t.concat(final_emb, flag));
}

nn::Var AblationModel::skills(nn::Tape& t, const StudentExamples& student, int context_len) {
    std::vector<nn::Var> zs;
    for (int i = 0; i < context_len; ++i)
        zs.push_back(task_rep(t, student.tasks[static_cast<std::size_t>(i)]));
    if (zs.empty()) throw EmptyHistory();
    nn::Var u = nn::lstm_sequence(t, "hist_lstm", zs, config_.hidden_size);
    return t.sigmoid(nn::linear(t, "obs_head", u));
}

nn::Var AblationModel::head(nn::Tape& t, nn::Var skills10, const Embedding& task_text) {
    nn::Var a = nn::mlp(t, "head_skills", skills10);
    nn::Var b = nn::mlp(t, "head_text", t.constant(to_doubles(task_text)));
    nn::Var mixed = t.add(t.bmul(a, t.param("mix.wa")), t.bmul(b, t.param("mix.wb")));
    return t.sigmoid(nn::linear(t, "out", mixed));
}

std::vector<LossTraceRow> AblationModel::fit(const std::vector<StudentExamples>& train,
                                             const Protocol& protocol, const FitOptions& options) {
    return bce_fit(params_, config_, name_, train, protocol, options,
                   [this](nn::Tape& tape, const StudentExamples& s, const ProtocolView& view,
                          double& bce_sum) {
                       nn::Var skills10 = skills(tape, s, view.context_len);
                       nn::Var loss{};
                       for (std::size_t k = 0; k < view.target_indices.size(); ++k) {
                           const TaskExample& ex =
                               s.tasks[static_cast<std::size_t>(view.target_indices[k])];
                           nn::Var p = head(tape, skills10, ex.task_text_embedding);
                           nn::Var bce = nn::bce_loss(tape, p, ex.struggled ? 1.0 : 0.0);
                           loss = k == 0 ? bce : tape.add(loss, bce);
                           bce_sum += tape.scalar_value(bce);
                       }
                       return loss;
                   });
}

std::vector<double> AblationModel::predict_targets(const StudentExamples& student, int context_len,
                                                   const std::vector<int>& target_indices) {
    context_len = std::min(context_len, static_cast<int>(student.tasks.size()));
    if (context_len < 1) throw EmptyHistory();
    nn::Tape tape(params_);
    nn::Var skills10 = skills(tape, student, context_len);
    std::vector<double> out;
    for (int j : target_indices) {
        const TaskExample& ex = student.tasks.at(static_cast<std::size_t>(j));
        out.push_back(tape.scalar_value(head(tape, skills10, ex.task_text_embedding)));
    }
    return out;
}

std::unique_ptr<StrugglePredictor> make_model(const std::string& name, const TrainConfig& config,
                                              int embed_dim,
                                              const std::vector<std::string>& task_vocab) {
    if (name == "ptm") return std::make_unique<PtmModel>(config, embed_dim);
    if (name == "dkt_target") return std::make_unique<DktModel>(config, task_vocab);
    if (name == "sakt") return std::make_unique<SaktModel>(config, task_vocab);
    if (name == "no_tax")
        return std::make_unique<AblationModel>(config, embed_dim, AblationVariant::no_tax);
    if (name == "no_tax_no_hist")
        return std::make_unique<AblationModel>(config, embed_dim, AblationVariant::no_tax_no_hist);
    throw Error(ErrorCategory::input, "UNKNOWN_MODEL", "unknown model name: " + name);
}

}  // namespace ptm
