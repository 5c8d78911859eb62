#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "ptm/errors.hpp"
#include "ptm/experiment.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
};

void add_common(CLI::App* sub, CommonFlags& flags) {
    sub->add_option("--config", flags.config_path, "experiment config file (TOML)");
    sub->add_option("--seed", flags.seed, "override train/split seed");
    sub->add_option("--out", flags.out_dir, "override output directory");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"struggling-student prediction pipeline"};
    app.require_subcommand(1);

    CommonFlags flags;
    CLI::App* ingest = app.add_subcommand("ingest", "load and normalize a dataset");
    CLI::App* label = app.add_subcommand("label", "derive struggle labels and concept gaps");
    CLI::App* train = app.add_subcommand("train", "train the first configured model");
    CLI::App* evaluate = app.add_subcommand("evaluate", "cross-validated evaluation");
    CLI::App* sweep = app.add_subcommand("sweep", "context-length sensitivity sweep");
    CLI::App* plot = app.add_subcommand("plot", "render SVG plots from artifact CSVs");
    CLI::App* run = app.add_subcommand("run", "full pipeline: ingest through plots");
    for (CLI::App* sub : {ingest, label, train, evaluate, sweep, plot, run})
        add_common(sub, flags);

    CLI11_PARSE(app, argc, argv);
    CLI::App* sub = app.get_subcommands().front();

    try {
        ptm::ExperimentConfig config;
        bool have_config = !flags.config_path.empty();
        if (have_config) config = ptm::load_experiment_config(flags.config_path);
        if (sub->count("--out")) config.out_dir = flags.out_dir;
        if (sub->count("--seed")) {
            config.train.seed = flags.seed;
            config.split_seed = flags.seed;
            config.bootstrap_seed = flags.seed + 1;
        }
        if (!have_config && sub != plot)
            throw ptm::Error(ptm::ErrorCategory::input, "CONFIG_REQUIRED",
                             "--config is required for this command");

        if (sub == ingest) {
            ptm::cmd_ingest(config);
        } else if (sub == label) {
            ptm::cmd_label(config);
        } else if (sub == train) {
            ptm::cmd_train(config);
        } else if (sub == evaluate) {
            ptm::cmd_evaluate(config);
        } else if (sub == sweep) {
            ptm::cmd_sweep(config);
        } else if (sub == plot) {
            if (config.out_dir.empty())
                throw ptm::Error(ptm::ErrorCategory::input, "CONFIG_REQUIRED",
                                 "plot needs --out or a config with run.out_dir");
            ptm::cmd_plot(config.out_dir);
        } else if (sub == run) {
            ptm::run_experiment(config);
        }
        return 0;
    } catch (const ptm::Error& e) {
        std::cerr << "ERROR " << e.code() << ": " << e.what() << std::endl;
        return ptm::exit_code(e);
    } catch (const std::exception& e) {
        std::cerr << "ERROR INTERNAL: " << e.what() << std::endl;
        return 1;
    }
}
