#include "ptm/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

#include "ptm/baselines.hpp"
#include "ptm/csv.hpp"
#include "ptm/encoders.hpp"
#include "ptm/hashutil.hpp"
#include "ptm/svgplot.hpp"
#include "ptm/timeparse.hpp"
#include "ptm/toml_lite.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ptm {

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

const char* rule_name(StruggleRule rule) {
    switch (rule) {
        case StruggleRule::none: return "none";
        case StruggleRule::failed_tests: return "failed_tests";
        case StruggleRule::excess_attempts: return "excess_attempts";
        case StruggleRule::both: return "both";
    }
    return "none";
}

Language parse_language(const std::string& name) {
    if (name == "python") return Language::python;
    if (name == "java") return Language::java;
    throw Error(ErrorCategory::input, "INVALID_CONFIG", "unknown language: " + name);
}

class Artifacts {
public:
    explicit Artifacts(std::string out_dir) : out_dir_(std::move(out_dir)) {
        fs::create_directories(out_dir_);
    }

    const std::string& out_dir() const { return out_dir_; }

    std::string path(const std::string& rel) const {
        fs::path p = fs::path(out_dir_) / rel;
        if (p.has_parent_path()) fs::create_directories(p.parent_path());
        return p.string();
    }

    void write_text(const std::string& rel, const std::string& content) const {
        std::string full = path(rel);
        std::ofstream out(full, std::ios::binary);
        if (!out)
            throw Error(ErrorCategory::input, "WRITE_FAILED", "cannot write " + full);
        out << content;
    }

private:
    std::string out_dir_;
};

struct Prepared {
    Corpus corpus;
    LabelingResult labels;
    std::vector<StudentExamples> students;
    std::vector<std::string> task_vocab;
    int embed_dim = 0;
    std::vector<std::string> warnings;
};

Corpus load_dataset(const ExperimentConfig& config) {
    if (config.dataset_dir.empty())
        throw DatasetNotFound("(dataset.dir is not set)");
    fs::path dir(config.dataset_dir);
    if (!fs::exists(dir / "tasks.csv") || !fs::exists(dir / "events.csv"))
        throw DatasetNotFound(config.dataset_dir);
    return load_corpus(config.dataset_dir);
}

Prepared prepare(const ExperimentConfig& config) {
    Prepared p;
    p.corpus = load_dataset(config);
    p.labels = label_corpus(p.corpus, default_concept_map());
    auto encoder = make_encoder(config.encoder_backend, config.encoder_dim);
    std::string cache_dir = config.cache_dir.empty()
                                ? (fs::path(config.out_dir) / "cache").string()
                                : config.cache_dir;
    fs::create_directories(cache_dir);
    EmbeddingCache cache(cache_dir);
    p.students = build_student_examples(p.corpus, p.labels, *encoder, cache, &p.warnings);
    for (const auto& [task_id, task] : p.corpus.tasks) p.task_vocab.push_back(task_id);
    p.embed_dim = encoder->backend().dim;
    return p;
}

json dataset_summary(const Corpus& corpus) {
    json j;
    j["n_tasks"] = corpus.tasks.size();
    j["n_students"] = corpus.students.size();
    j["n_events"] = corpus.events.size();
    j["n_pairs"] = group_events(corpus).size();
    if (!corpus.events.empty()) {
        std::int64_t lo = std::numeric_limits<std::int64_t>::max();
        std::int64_t hi = std::numeric_limits<std::int64_t>::min();
        for (const auto& e : corpus.events) {
            lo = std::min(lo, e.timestamp);
            hi = std::max(hi, e.timestamp);
        }
        j["first_event"] = format_iso8601_utc(lo);
        j["last_event"] = format_iso8601_utc(hi);
    }
    return j;
}

std::string labels_csv(const LabelingResult& labels) {
    std::ostringstream out;
    std::vector<std::string> row = {"student_id", "task_id",  "attempts", "final_score",
                                    "passed_all", "struggled", "rule",     "threshold"};
    write_csv_row(out, row);
    for (const auto& [key, pair] : labels.pairs) {
        std::optional<int> threshold;
        auto it = labels.thresholds.find(key.second);
        if (it != labels.thresholds.end()) threshold = it->second;
        row = {key.first,
               key.second,
               std::to_string(pair.outcome.attempt_count),
               fmt17(pair.outcome.final_score),
               pair.outcome.passed_all ? "1" : "0",
               pair.label.value ? "1" : "0",
               rule_name(pair.label.rule),
               threshold ? std::to_string(*threshold) : ""};
        write_csv_row(out, row);
    }
    return out.str();
}

std::string lacking_csv(const std::vector<ConceptGapRow>& rows) {
    std::ostringstream out;
    std::vector<std::string> row = {"concept", "pct_lacking_struggling",
                                    "pct_lacking_non_struggling", "n_struggling",
                                    "n_non_struggling"};
    write_csv_row(out, row);
    for (const auto& r : rows) {
        row = {std::string(concept_name(r.concept_id)), fmt17(r.pct_lacking_struggling),
               fmt17(r.pct_lacking_non_struggling), std::to_string(r.n_struggling),
               std::to_string(r.n_non_struggling)};
        write_csv_row(out, row);
    }
    return out.str();
}

std::string trace_csv(const std::vector<LossTraceRow>& trace) {
    std::ostringstream out;
    std::vector<std::string> row = {"epoch", "mae", "bce", "total"};
    write_csv_row(out, row);
    for (const auto& r : trace) {
        row = {std::to_string(r.epoch), fmt17(r.mae), fmt17(r.bce), fmt17(r.total)};
        write_csv_row(out, row);
    }
    return out.str();
}

std::string predictions_csv(const std::vector<ModelEvaluation>& evaluations) {
    std::ostringstream out;
    std::vector<std::string> row = {"model", "fold", "student_id", "task_id", "prob", "label"};
    write_csv_row(out, row);
    for (const auto& ev : evaluations)
        for (const auto& r : ev.records) {
            row = {r.model_name,  std::to_string(r.fold),       r.student_id,
                   r.task_id,     fmt17(r.predicted_prob),      std::to_string(r.true_label)};
            write_csv_row(out, row);
        }
    return out.str();
}

std::string sensitivity_csv(const std::vector<SensitivityPoint>& curve) {
    std::ostringstream out;
    std::vector<std::string> row = {"length", "auc"};
    write_csv_row(out, row);
    for (const auto& p : curve) {
        row = {std::to_string(p.length), fmt17(p.auc)};
        write_csv_row(out, row);
    }
    return out.str();
}

json config_echo(const ExperimentConfig& config) {
    json j;
    j["dataset"] = {{"dir", config.dataset_dir},
                    {"language", config.language == Language::python ? "python" : "java"}};
    j["run"] = {{"out_dir", config.out_dir},
                {"models", config.models},
                {"split_seed", config.split_seed},
                {"k_folds", config.k_folds},
                {"checkpoint_every_epoch", config.checkpoint_every_epoch}};
    j["train"] = {{"hidden_size", config.train.hidden_size},
                  {"epochs", config.train.epochs},
                  {"learning_rate", config.train.learning_rate},
                  {"batch_size", config.train.batch_size},
                  {"alpha", config.train.alpha},
                  {"max_attempts_per_task", config.train.max_attempts_per_task},
                  {"seed", config.train.seed},
                  {"attn_dim", config.train.attn_dim},
                  {"student_ref_dim", config.train.student_ref_dim}};
    j["protocol"] = {{"context_tasks", config.protocol.context_tasks},
                     {"max_targets", config.protocol.max_targets}};
    j["encoder"] = {{"backend", config.encoder_backend}, {"dim", config.encoder_dim}};
    j["significance"] = {{"enabled", config.significance},
                         {"resamples", config.bootstrap_resamples},
                         {"alpha", config.significance_alpha},
                         {"seed", config.bootstrap_seed}};
    j["sweep"] = {{"lengths", config.sweep_lengths}, {"model", config.sweep_model}};
    return j;
}

struct EvalOutputs {
    std::vector<ModelEvaluation> evaluations;
    json metrics;
};

EvalOutputs evaluate_all(const ExperimentConfig& config, const Prepared& p,
                         const Artifacts& art) {
    std::set<std::string> ids;
    for (const auto& s : p.students) ids.insert(s.student_id);
    SplitPlan plan = make_splits(ids, config.k_folds, config.split_seed);

    EvalOutputs out;
    out.metrics["dataset"] = dataset_summary(p.corpus);
    out.metrics["protocol"] = {{"context_tasks", config.protocol.context_tasks},
                               {"max_targets", config.protocol.max_targets}};
    out.metrics["split"] = {{"k_folds", config.k_folds}, {"seed", config.split_seed}};
    out.metrics["encoder"] = {{"backend", config.encoder_backend}};

    for (const auto& name : config.models) {
        EvalOptions options;
        options.protocol = config.protocol;
        options.split_seed = config.split_seed;
        options.k_folds = config.k_folds;
        options.checkpoint_dir = art.path("checkpoints/" + name);
        fs::create_directories(options.checkpoint_dir);
        ModelFactory factory = [&config, &p, &name]() {
            return make_model(name, config.train, p.embed_dim, p.task_vocab);
        };
        std::cout << "evaluating " << name << " (" << config.k_folds << " folds)" << std::endl;
        ModelEvaluation ev = evaluate_model(name, factory, p.students, plan, options);
        std::cout << "  " << name << ": auc " << ev.auc_mean << " +/- " << ev.auc_std
                  << ", ece " << ev.ece_pooled << ", params " << ev.param_count << std::endl;

        json m;
        m["auc_mean"] = ev.auc_mean;
        m["auc_std"] = ev.auc_std;
        m["ece"] = ev.ece_pooled;
        m["param_count"] = ev.param_count;
        m["n_records"] = ev.records.size();
        m["n_exclusions"] = ev.exclusions.size();
        json folds = json::array();
        for (const auto& f : ev.folds)
            folds.push_back({{"fold", f.fold},
                             {"auc", f.auc},
                             {"ece", f.ece},
                             {"n_records", f.n_records},
                             {"n_students", f.n_students}});
        m["folds"] = folds;
        out.metrics["models"][name] = m;

        for (std::size_t f = 0; f < ev.traces.size(); ++f)
            art.write_text("traces/loss_" + name + "_fold" + std::to_string(f) + ".csv",
                           trace_csv(ev.traces[f]));
        out.evaluations.push_back(std::move(ev));
    }

    if (config.significance && config.models.size() > 1) {
        const ModelEvaluation& reference = out.evaluations.front();
        json comparisons = json::array();
        std::vector<double> p_values;
        std::vector<const ModelEvaluation*> others;
        for (std::size_t i = 1; i < out.evaluations.size(); ++i)
            others.push_back(&out.evaluations[i]);
        for (const ModelEvaluation* other : others) {
            BootstrapResult b =
                paired_bootstrap(reference.records, other->records, config.bootstrap_resamples,
                                 config.bootstrap_seed);
            p_values.push_back(b.p_value);
            comparisons.push_back({{"model", other->model_name},
                                   {"observed_delta", b.observed_delta},
                                   {"p_value", b.p_value},
                                   {"ci_low", b.ci_low},
                                   {"ci_high", b.ci_high}});
        }
        std::vector<bool> decisions = bonferroni(p_values, config.significance_alpha);
        for (std::size_t i = 0; i < decisions.size(); ++i)
            comparisons[i]["reject_bonferroni"] = static_cast<bool>(decisions[i]);
        out.metrics["significance"] = {{"reference", reference.model_name},
                                       {"alpha", config.significance_alpha},
                                       {"resamples", config.bootstrap_resamples},
                                       {"seed", config.bootstrap_seed},
                                       {"comparisons", comparisons}};
    }

    std::vector<std::string> exclusions =
        out.evaluations.empty() ? std::vector<std::string>{} : out.evaluations.front().exclusions;
    out.metrics["n_excluded_students"] = exclusions.size();
    if (!exclusions.empty()) {
        std::ostringstream text;
        for (const auto& line : exclusions) text << line << "\n";
        art.write_text("exclusions.txt", text.str());
    }
    return out;
}

std::vector<SensitivityPoint> sweep_stage(const ExperimentConfig& config, const Prepared& p,
                                          const Artifacts& art) {
    std::string name = config.sweep_model.empty() ? config.models.at(0) : config.sweep_model;
    std::set<std::string> ids;
    for (const auto& s : p.students) ids.insert(s.student_id);
    SplitPlan plan = make_splits(ids, config.k_folds, config.split_seed);
    std::vector<StudentExamples> train, test;
    for (const auto& s : p.students) {
        if (plan.fold_of.at(s.student_id) == 0)
            test.push_back(s);
        else
            train.push_back(s);
    }
    auto model = make_model(name, config.train, p.embed_dim, p.task_vocab);
    std::cout << "sweep: training " << name << " on " << train.size() << " students" << std::endl;
    std::vector<LossTraceRow> trace = model->fit(train, config.protocol, {});
    art.write_text("traces/loss_" + name + "_sweep.csv", trace_csv(trace));
    std::vector<SensitivityPoint> curve =
        sensitivity_sweep(*model, test, config.protocol, config.sweep_lengths);
    art.write_text("sensitivity.csv", sensitivity_csv(curve));
    return curve;
}

std::vector<SensitivityPoint> read_sensitivity_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingInput("cannot open " + path);
    CsvReader reader(in);
    std::vector<std::string> fields;
    if (!reader.next(fields)) throw MissingInput(path + " is empty");
    std::vector<SensitivityPoint> curve;
    while (reader.next(fields)) {
        if (fields.size() < 2) throw MissingInput(path + " is malformed");
        curve.push_back({std::stoi(fields[0]), std::stod(fields[1])});
    }
    if (curve.empty()) throw MissingInput(path + " has no data rows");
    return curve;
}

std::vector<BarGroup> read_lacking_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingInput("cannot open " + path);
    CsvReader reader(in);
    std::vector<std::string> fields;
    if (!reader.next(fields)) throw MissingInput(path + " is empty");
    std::vector<BarGroup> groups;
    while (reader.next(fields)) {
        if (fields.size() < 3) throw MissingInput(path + " is malformed");
        groups.push_back({fields[0], std::stod(fields[1]), std::stod(fields[2])});
    }
    if (groups.empty()) throw MissingInput(path + " has no data rows");
    return groups;
}

// Renders whatever plottable CSVs exist; returns the files written.
std::vector<std::string> plot_from_csvs(const Artifacts& art) {
    std::vector<std::string> written;
    std::string sens = art.path("sensitivity.csv");
    if (fs::exists(sens)) {
        std::vector<SensitivityPoint> curve = read_sensitivity_csv(sens);
        CurveSeries series{"roc-auc", {}};
        for (const auto& p : curve)
            series.points.push_back({static_cast<double>(p.length), p.auc});
        art.write_text("sensitivity.svg",
                       render_curve_svg({series}, "Context-length sensitivity",
                                        "number of past tasks", "ROC-AUC"));
        written.push_back("sensitivity.svg");
    }
    std::string lacking = art.path("lacking_concepts.csv");
    if (fs::exists(lacking)) {
        std::vector<BarGroup> groups = read_lacking_csv(lacking);
        art.write_text("lacking_concepts.svg",
                       render_grouped_bars_svg(groups, "Lacking concepts in final submissions",
                                               "struggling", "non-struggling",
                                               "% lacking the concept"));
        written.push_back("lacking_concepts.svg");
    }
    return written;
}

void write_manifest(const ExperimentConfig& config, const Artifacts& art,
                    std::vector<std::string>* files_out) {
    json manifest;
    manifest["config"] = config_echo(config);
    if (!config.config_path.empty() && fs::exists(config.config_path))
        manifest["config_sha256"] = sha256_file_hex(config.config_path);
    json inputs;
    for (const char* name : {"tasks.csv", "events.csv"}) {
        fs::path p = fs::path(config.dataset_dir) / name;
        if (fs::exists(p)) inputs[name] = sha256_file_hex(p);
    }
    manifest["inputs"] = inputs;

    std::vector<std::string> rels;
    for (const auto& entry : fs::recursive_directory_iterator(art.out_dir())) {
        if (!entry.is_regular_file()) continue;
        std::string rel = fs::relative(entry.path(), art.out_dir()).generic_string();
        if (rel == "manifest.json") continue;
        rels.push_back(rel);
    }
    std::sort(rels.begin(), rels.end());
    json artifacts;
    for (const auto& rel : rels) {
        fs::path full = fs::path(art.out_dir()) / rel;
        artifacts[rel] = {{"sha256", sha256_file_hex(full)},
                          {"bytes", fs::file_size(full)}};
    }
    manifest["artifacts"] = artifacts;
    art.write_text("manifest.json", manifest.dump(2) + "\n");
    if (files_out) *files_out = rels;
}

}  // namespace

ExperimentConfig load_experiment_config(const std::string& path) {
    if (!fs::exists(path))
        throw Error(ErrorCategory::input, "CONFIG_NOT_FOUND", "config not found: " + path);
    TomlLite toml;
    try {
        toml = TomlLite::parse_file(path);
    } catch (const TomlLite::ParseError& e) {
        throw Error(ErrorCategory::input, "CONFIG_PARSE", e.what());
    }
    ExperimentConfig c;
    c.config_path = path;
    c.dataset_dir = toml.get_string("dataset.dir", "");
    c.language = parse_language(toml.get_string("dataset.language", "python"));
    c.out_dir = toml.get_string("run.out_dir", c.out_dir);
    std::vector<std::string> models = toml.get_string_array("run.models");
    if (!models.empty()) c.models = models;
    c.split_seed = static_cast<std::uint64_t>(
        toml.get_int("run.split_seed", static_cast<std::int64_t>(c.split_seed)));
    c.k_folds = static_cast<int>(toml.get_int("run.k_folds", c.k_folds));
    c.checkpoint_every_epoch = toml.get_bool("run.checkpoint_every_epoch", false);

    TrainConfig& t = c.train;
    t.hidden_size = static_cast<int>(toml.get_int("train.hidden_size", t.hidden_size));
    t.epochs = static_cast<int>(toml.get_int("train.epochs", t.epochs));
    t.learning_rate = toml.get_double("train.learning_rate", t.learning_rate);
    t.batch_size = static_cast<int>(toml.get_int("train.batch_size", t.batch_size));
    t.alpha = toml.get_double("train.alpha", t.alpha);
    t.max_attempts_per_task =
        static_cast<int>(toml.get_int("train.max_attempts_per_task", t.max_attempts_per_task));
    t.seed = static_cast<std::uint64_t>(
        toml.get_int("train.seed", static_cast<std::int64_t>(t.seed)));
    t.attn_dim = static_cast<int>(toml.get_int("train.attn_dim", t.attn_dim));
    t.student_ref_dim =
        static_cast<int>(toml.get_int("train.student_ref_dim", t.student_ref_dim));

    c.protocol.context_tasks =
        static_cast<int>(toml.get_int("protocol.context_tasks", c.protocol.context_tasks));
    c.protocol.max_targets =
        static_cast<int>(toml.get_int("protocol.max_targets", c.protocol.max_targets));

    c.encoder_backend = toml.get_string("encoder.backend", c.encoder_backend);
    c.encoder_dim = static_cast<int>(toml.get_int("encoder.dim", c.encoder_dim));
    c.cache_dir = toml.get_string("encoder.cache_dir", "");

    c.significance = toml.get_bool("significance.enabled", c.significance);
    c.bootstrap_resamples =
        static_cast<int>(toml.get_int("significance.resamples", c.bootstrap_resamples));
    c.significance_alpha = toml.get_double("significance.alpha", c.significance_alpha);
    c.bootstrap_seed = static_cast<std::uint64_t>(
        toml.get_int("significance.seed", static_cast<std::int64_t>(c.bootstrap_seed)));

    for (std::int64_t v : toml.get_int_array("sweep.lengths"))
        c.sweep_lengths.push_back(static_cast<int>(v));
    c.sweep_model = toml.get_string("sweep.model", "");

    if (c.models.empty())
        throw Error(ErrorCategory::input, "INVALID_CONFIG", "run.models is empty");
    validate_train_config(c.train);
    return c;
}

void cmd_ingest(const ExperimentConfig& config) {
    Corpus corpus = load_dataset(config);
    Artifacts art(config.out_dir);
    art.write_text("dataset_summary.json", dataset_summary(corpus).dump(2) + "\n");
    fs::create_directories(fs::path(config.out_dir) / "normalized");
    write_corpus(corpus, (fs::path(config.out_dir) / "normalized").string());
    std::cout << "ingested " << corpus.students.size() << " students, " << corpus.tasks.size()
              << " tasks, " << corpus.events.size() << " events" << std::endl;
}

void cmd_label(const ExperimentConfig& config) {
    Corpus corpus = load_dataset(config);
    LabelingResult labels = label_corpus(corpus, default_concept_map());
    Artifacts art(config.out_dir);
    art.write_text("labels.csv", labels_csv(labels));
    std::vector<ConceptGapRow> gaps =
        concept_gap_analysis(corpus, labels, default_pattern_table(), config.language);
    art.write_text("lacking_concepts.csv", lacking_csv(gaps));
    if (!labels.warnings.empty()) {
        std::ostringstream text;
        for (const auto& w : labels.warnings) text << w << "\n";
        art.write_text("label_warnings.txt", text.str());
    }
    std::size_t n_struggling = 0;
    for (const auto& [key, pair] : labels.pairs) n_struggling += pair.label.value ? 1u : 0u;
    std::cout << "labeled " << labels.pairs.size() << " pairs, " << n_struggling
              << " struggling" << std::endl;
}

void cmd_train(const ExperimentConfig& config) {
    Prepared p = prepare(config);
    Artifacts art(config.out_dir);
    const std::string& name = config.models.at(0);
    auto model = make_model(name, config.train, p.embed_dim, p.task_vocab);
    FitOptions options;
    options.checkpoint_dir = art.path("checkpoints/" + name);
    fs::create_directories(options.checkpoint_dir);
    options.every_epoch = config.checkpoint_every_epoch;
    std::cout << "training " << name << " on " << p.students.size() << " students" << std::endl;
    std::vector<LossTraceRow> trace = model->fit(p.students, config.protocol, options);
    art.write_text("traces/loss_" + name + ".csv", trace_csv(trace));

    json info;
    info["model"] = name;
    info["param_count"] = model->param_count();
    json tensors = json::array();
    for (const auto& tname : model->params().names()) {
        const nn::Tensor& tensor = model->params().at(tname);
        tensors.push_back({{"name", tname}, {"rows", tensor.rows}, {"cols", tensor.cols}});
    }
    info["tensors"] = tensors;
    art.write_text("model_info.json", info.dump(2) + "\n");
    std::cout << "trained " << name << ": " << model->param_count() << " params, final loss "
              << trace.back().total << std::endl;
}

ExperimentResult cmd_evaluate(const ExperimentConfig& config) {
    Prepared p = prepare(config);
    Artifacts art(config.out_dir);
    EvalOutputs ev = evaluate_all(config, p, art);
    art.write_text("predictions.csv", predictions_csv(ev.evaluations));
    art.write_text("metrics.json", ev.metrics.dump(2) + "\n");
    ExperimentResult result;
    result.out_dir = config.out_dir;
    result.evaluations = std::move(ev.evaluations);
    return result;
}

void cmd_sweep(const ExperimentConfig& config) {
    if (config.sweep_lengths.empty())
        throw Error(ErrorCategory::input, "INVALID_CONFIG", "sweep.lengths is empty");
    Prepared p = prepare(config);
    Artifacts art(config.out_dir);
    std::vector<SensitivityPoint> curve = sweep_stage(config, p, art);
    for (const auto& point : curve)
        std::cout << "  length " << point.length << ": auc " << point.auc << std::endl;
}

void cmd_plot(const std::string& out_dir) {
    Artifacts art(out_dir);
    std::vector<std::string> written = plot_from_csvs(art);
    if (written.empty())
        throw MissingInput("no sensitivity.csv or lacking_concepts.csv in " + out_dir);
    for (const auto& f : written) std::cout << "wrote " << f << std::endl;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    Prepared p = prepare(config);
    Artifacts art(config.out_dir);
    art.write_text("dataset_summary.json", dataset_summary(p.corpus).dump(2) + "\n");
    art.write_text("labels.csv", labels_csv(p.labels));
    std::vector<ConceptGapRow> gaps =
        concept_gap_analysis(p.corpus, p.labels, default_pattern_table(), config.language);
    art.write_text("lacking_concepts.csv", lacking_csv(gaps));
    if (!p.warnings.empty() || !p.labels.warnings.empty()) {
        std::ostringstream text;
        for (const auto& w : p.labels.warnings) text << w << "\n";
        for (const auto& w : p.warnings) text << w << "\n";
        art.write_text("warnings.txt", text.str());
    }

    EvalOutputs ev = evaluate_all(config, p, art);
    art.write_text("predictions.csv", predictions_csv(ev.evaluations));

    ExperimentResult result;
    result.out_dir = config.out_dir;
    if (!config.sweep_lengths.empty()) result.sensitivity = sweep_stage(config, p, art);

    art.write_text("metrics.json", ev.metrics.dump(2) + "\n");
    plot_from_csvs(art);
    write_manifest(config, art, &result.artifact_files);
    result.evaluations = std::move(ev.evaluations);
    std::cout << "artifacts in " << config.out_dir << " (" << result.artifact_files.size()
              << " files)" << std::endl;
    return result;
}

bool verify_manifest(const std::string& out_dir, std::vector<std::string>* failures) {
    fs::path manifest_path = fs::path(out_dir) / "manifest.json";
    if (!fs::exists(manifest_path)) {
        if (failures) failures->push_back("manifest.json missing");
        return false;
    }
    std::ifstream in(manifest_path, std::ios::binary);
    json manifest = json::parse(in, nullptr, false);
    if (manifest.is_discarded() || !manifest.contains("artifacts")) {
        if (failures) failures->push_back("manifest.json unparsable");
        return false;
    }
    bool ok = true;
    for (const auto& [rel, entry] : manifest["artifacts"].items()) {
        fs::path full = fs::path(out_dir) / rel;
        if (!fs::exists(full)) {
            ok = false;
            if (failures) failures->push_back(rel + ": missing");
            continue;
        }
        std::string expected = entry.at("sha256").get<std::string>();
        if (sha256_file_hex(full) != expected) {
            ok = false;
            if (failures) failures->push_back(rel + ": hash mismatch");
        }
    }
    return ok;
}

}  // namespace ptm
