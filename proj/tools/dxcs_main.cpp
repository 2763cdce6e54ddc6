#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dxcs/errors.hpp"
#include "dxcs/experiment.hpp"

namespace {

const std::vector<std::string> kConfigKeys = {
    "dataset", "train_images", "train_labels", "test_images", "test_labels",
    "csv_path", "csv_header", "csv_label_column", "csv_image_side",
    "cache_train", "cache_test", "split", "split_seed", "arch", "h_init",
    "pop_max", "adaptive_pop", "mode", "epsilon0", "beta", "alpha", "nu",
    "delta", "theta_del", "fit_init", "err_init", "fit_reduction",
    "err_reduction", "theta_ea", "lambda", "chi", "omega", "h_max",
    "connection_mutation", "pop_init", "sigma_init", "sigma_cover", "trials",
    "validate_every", "val_ma_window", "val_sample", "train_order", "seed",
    "out_dir", "record_timing",
};

// One string option per config field; file values first, flags override.
void add_config_flags(CLI::App* cmd, std::map<std::string, std::string>& overrides) {
    for (const auto& key : kConfigKeys) {
        cmd->add_option_function<std::string>(
            "--" + key,
            [&overrides, key](const std::string& v) { overrides[key] = v; });
    }
}

dxcs::ExperimentConfig build_config(const std::string& config_path,
                                    const std::map<std::string, std::string>& overrides) {
    dxcs::ExperimentConfig cfg;
    if (!config_path.empty()) {
        cfg = dxcs::parse_config_file(config_path);
    }
    for (const auto& [k, v] : overrides) {
        dxcs::apply_config_kv(cfg, k, v);
    }
    cfg.validate();
    return cfg;
}

std::string default_data_dir(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("DXCS_DATA_DIR")) return env;
    return "";
}

int cmd_train(const std::string& config_path,
              const std::map<std::string, std::string>& overrides,
              const std::string& data_dir, bool quiet) {
    const dxcs::ExperimentConfig cfg = build_config(config_path, overrides);
    const dxcs::ExperimentData data =
        dxcs::load_experiment_data(cfg, default_data_dir(data_dir));
    const dxcs::RunResult res =
        dxcs::run_experiment(cfg, data, quiet ? nullptr : &std::cerr);
    std::cout << "best_val_ma " << res.best_val_ma << "\n"
              << "best_trial " << res.best_trial << "\n"
              << "final_val_err " << res.final_val_error << "\n"
              << "metrics " << res.metrics_path << "\n"
              << "best_checkpoint " << res.best_checkpoint << "\n";
    return 0;
}

int cmd_evaluate(const std::string& config_path,
                 const std::map<std::string, std::string>& overrides,
                 const std::string& data_dir, const std::string& checkpoint,
                 const std::string& dump_path) {
    const dxcs::ExperimentConfig cfg = build_config(config_path, overrides);
    const dxcs::ExperimentData data =
        dxcs::load_experiment_data(cfg, default_data_dir(data_dir));

    dxcs::Lcs lcs(cfg.lcs_params(), dxcs::make_cond_spec(cfg, data.train),
                  dxcs::make_pred_spec(cfg, data.train), cfg.seed);
    std::ifstream is(checkpoint, std::ios::binary);
    if (!is) throw dxcs::DataError("cannot open checkpoint " + checkpoint);
    const uint64_t hash = lcs.load(is);
    if (hash != cfg.hash()) {
        std::cerr << "warning: checkpoint config hash " << hash
                  << " does not match the supplied config (" << cfg.hash()
                  << ")\n";
    }

    std::ofstream dump_file;
    std::ostream* dump = nullptr;
    if (!dump_path.empty()) {
        dump_file.open(dump_path);
        if (!dump_file) throw dxcs::DataError("cannot write " + dump_path);
        dump = &dump_file;
    }
    const dxcs::TestEval ev = dxcs::evaluate_test(lcs, data.test_set(),
                                                  data.test_indices(), dump);
    std::cout << "instances " << ev.n << "\n"
              << "uncovered " << ev.uncovered << "\n"
              << "accuracy " << ev.accuracy << "\n";
    return 0;
}

int cmd_inspect(const std::string& checkpoint, bool verbose) {
    std::ifstream is(checkpoint, std::ios::binary);
    if (!is) throw dxcs::DataError("cannot open checkpoint " + checkpoint);
    const dxcs::Checkpoint ck = dxcs::read_checkpoint(is);
    int micros = 0;
    size_t pred_weights = 0;
    for (const auto& cl : ck.classifiers) {
        micros += cl.numerosity;
        pred_weights += cl.pred.enabled_weights() * static_cast<size_t>(cl.numerosity);
    }
    std::cout << "config_hash " << ck.config_hash << "\n"
              << "trial " << ck.trial << "\n"
              << "pop_limit " << ck.pop_max << "\n"
              << "sys_err_ma " << ck.sys_err_ma << "\n"
              << "mset_ma " << ck.mset_ma << "\n"
              << "macro_classifiers " << ck.classifiers.size() << "\n"
              << "micro_classifiers " << micros << "\n"
              << "enabled_pred_weights " << pred_weights << "\n";
    if (verbose) {
        std::cout << "index,fitness,error,experience,numerosity,set_size,"
                     "enabled_weights,pred_units\n";
        for (size_t i = 0; i < ck.classifiers.size(); ++i) {
            const auto& cl = ck.classifiers[i];
            std::cout << i << ',' << cl.fitness << ',' << cl.error << ','
                      << cl.experience << ',' << cl.numerosity << ','
                      << cl.set_size << ',' << cl.enabled_weights() << ",\"";
            for (size_t li = 0; li < cl.pred.layers.size(); ++li) {
                if (li) std::cout << ' ';
                std::cout << cl.pred.layers[li].n_units;
            }
            std::cout << "\"\n";
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deep neural XCSF: online classifier system with evolved "
                 "gating and gradient-refined prediction networks"};
    app.require_subcommand(1);

    std::string config_path, data_dir, checkpoint, dump_path;
    std::map<std::string, std::string> overrides;
    bool quiet = false, verbose = false;

    auto* train = app.add_subcommand("train", "Run a learning experiment");
    train->add_option("--config", config_path, "key=value config file");
    train->add_option("--data-dir", data_dir,
                      "prefix for relative data paths (env DXCS_DATA_DIR)");
    train->add_flag("--quiet", quiet, "suppress per-iteration progress");
    add_config_flags(train, overrides);

    auto* eval = app.add_subcommand("evaluate", "Score a checkpoint on the test set");
    eval->add_option("--config", config_path, "key=value config file");
    eval->add_option("--data-dir", data_dir, "prefix for relative data paths");
    eval->add_option("--checkpoint", checkpoint, "population checkpoint")->required();
    eval->add_option("--dump", dump_path, "per-instance prediction csv");
    add_config_flags(eval, overrides);

    auto* inspect = app.add_subcommand("inspect-checkpoint", "Print checkpoint contents");
    inspect->add_option("--checkpoint", checkpoint, "population checkpoint")->required();
    inspect->add_flag("--verbose", verbose, "per-classifier table");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return cmd_train(config_path, overrides, data_dir, quiet);
        if (eval->parsed()) return cmd_evaluate(config_path, overrides, data_dir,
                                                checkpoint, dump_path);
        return cmd_inspect(checkpoint, verbose);
    } catch (const dxcs::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const dxcs::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
