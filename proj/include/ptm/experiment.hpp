#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ptm/corpus.hpp"
#include "ptm/eval.hpp"
#include "ptm/labeling.hpp"
#include "ptm/model_input.hpp"

namespace ptm {

struct DatasetNotFound : Error {
    explicit DatasetNotFound(const std::string& path)
        : Error(ErrorCategory::input, "DATASET_NOT_FOUND", "dataset not found: " + path) {}
};

struct ExperimentConfig {
    std::string config_path;  // file the config came from; empty if built in code
    std::string dataset_dir;
    std::string out_dir = "out";
    Language language = Language::python;

    std::vector<std::string> models = {"ptm"};
    TrainConfig train;
    Protocol protocol;

    std::uint64_t split_seed = 7;
    int k_folds = 5;
    bool checkpoint_every_epoch = false;

    std::string encoder_backend = "hashing";
    int encoder_dim = 0;    // 0: backend default
    std::string cache_dir;  // empty: <out_dir>/cache

    bool significance = true;
    int bootstrap_resamples = 10000;
    double significance_alpha = 0.05;
    std::uint64_t bootstrap_seed = 17;

    std::vector<int> sweep_lengths;  // empty: no sensitivity sweep
    std::string sweep_model;         // empty: first entry of models
};

ExperimentConfig load_experiment_config(const std::string& path);

struct ExperimentResult {
    std::string out_dir;
    std::vector<ModelEvaluation> evaluations;
    std::vector<SensitivityPoint> sensitivity;
    std::vector<std::string> artifact_files;  // relative to out_dir
};

// Pipeline verbs. All write their artifacts under config.out_dir and throw
// ptm::Error on failure; the CLI maps categories to exit codes.
void cmd_ingest(const ExperimentConfig& config);
void cmd_label(const ExperimentConfig& config);
void cmd_train(const ExperimentConfig& config);
ExperimentResult cmd_evaluate(const ExperimentConfig& config);
void cmd_sweep(const ExperimentConfig& config);
void cmd_plot(const std::string& out_dir);

// Full pipeline: ingest, label, cross-validated evaluation of every
// configured model, significance tests, optional sensitivity sweep, plots,
// and a manifest with content hashes of inputs and artifacts.
ExperimentResult run_experiment(const ExperimentConfig& config);

// Re-hashes every file listed in <out_dir>/manifest.json.
bool verify_manifest(const std::string& out_dir, std::vector<std::string>* failures = nullptr);

}  // namespace ptm
