#pragma once

#include <cstdint>
#include <string>

#include "dxcs/lcs.hpp"

namespace dxcs {

// Everything a run needs; file keys and CLI flags map 1:1 onto fields.
struct ExperimentConfig {
    // data
    std::string dataset = "idx"; // idx | csv | cache
    std::string train_images;
    std::string train_labels;
    std::string test_images;
    std::string test_labels;
    std::string csv_path;
    bool csv_header = false;
    int csv_label_column = -1;
    int csv_image_side = 0;
    std::string cache_train;
    std::string cache_test;
    std::string split = "train-val"; // train-val (separate test files) | holdout
    uint64_t split_seed = 1;

    // model
    std::string arch = "fc"; // fc | conv
    int h_init = 20; // initial units per hidden layer (P.h_I)

    // learning parameters
    int pop_max = 500;
    bool adaptive_pop = false;
    std::string mode = "xcsf"; // xcsf | ea-control
    double epsilon0 = 0.01;
    double beta = 0.05;
    double alpha = 1.0;
    double nu = 5.0;
    double delta = 0.1;
    uint64_t theta_del = 100;
    double fit_init = 0.01;
    double err_init = 0.0;
    double fit_reduction = 0.1;
    double err_reduction = 1.0;
    double theta_ea = 100.0;
    int lambda = 2;
    double chi = 0.0; // crossover; must stay 0
    double omega = 0.9;
    int h_max = 1;
    bool connection_mutation = true;
    bool pop_init = true;
    double sigma_init = 0.1;
    double sigma_cover = 1.0;

    // schedule
    uint64_t trials = 1000000;
    uint64_t validate_every = 1000;
    int val_ma_window = 10;
    uint64_t val_sample = 1000; // 0 = score the whole validation split
    std::string train_order = "random"; // random (iid) | epoch (shuffled passes)
    uint64_t seed = 1;

    // output
    std::string out_dir = "run";
    bool record_timing = true;

    void validate() const; // throws ConfigError
    // Canonical key=value echo, stable order; output-only fields (out_dir,
    // record_timing) can be excluded.
    std::string to_text(bool include_output = true) const;
    uint64_t hash() const; // FNV-1a over to_text(false)
    LcsParams lcs_params() const;
};

// key=value lines; '#' comments and blank lines ignored.
ExperimentConfig parse_config_file(const std::string& path);

// Shared by the file parser and CLI flag overrides; unknown key throws.
void apply_config_kv(ExperimentConfig& cfg, const std::string& key,
                     const std::string& value);

} // namespace dxcs
