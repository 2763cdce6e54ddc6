#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dxcs/config.hpp"
#include "dxcs/dataset.hpp"
#include "dxcs/lcs.hpp"

namespace dxcs {

inline constexpr const char* kVersionString = "dxcs 0.1.0";

struct ExperimentData {
    Dataset train;
    Dataset test; // empty when plan.test indexes into train
    SplitPlan plan;

    const Dataset& test_set() const { return test.size() ? test : train; }
    std::span<const size_t> test_indices() const {
        return test.size() ? all_test_ : std::span<const size_t>(plan.test);
    }
    void finalize(); // fills all_test_ for a separate test set
private:
    std::vector<size_t> all_test_;
};

// Resolves the configured dataset + split. Relative paths are prefixed with
// data_dir when it is non-empty.
ExperimentData load_experiment_data(const ExperimentConfig& cfg,
                                    const std::string& data_dir);

// One non-learning scoring pass: no covering, unmatched instances count as
// errors and are tallied separately.
struct ScorePass {
    double error = 0.0; // mean 0/1 system loss
    size_t uncovered = 0;
    size_t scored = 0;
    std::vector<size_t> match_counts; // per macro-classifier, pass-aligned
};

ScorePass score_set(const Lcs& lcs, const Dataset& ds,
                    std::span<const size_t> indices);

// Best-rule selection: among rules below the target error the one matching
// the most inputs; if none is below, the lowest-error rule. Ties break to
// more matches, then lower index.
struct BestRule {
    int index = -1;
    double match_fraction = 0.0;
};
BestRule best_rule(const Lcs& lcs, const ScorePass& pass);

struct RunResult {
    double best_val_ma = 1.0;
    uint64_t best_trial = 0;
    double final_val_error = 1.0;
    std::string best_checkpoint;
    std::string final_checkpoint;
    std::string metrics_path;
};

// The learn/validate alternation with metrics capture and best-population
// checkpointing. Data must already be loaded; cfg must validate().
RunResult run_experiment(const ExperimentConfig& cfg, const ExperimentData& data,
                         std::ostream* log = nullptr);

struct TestEval {
    double accuracy = 0.0;
    size_t uncovered = 0;
    size_t n = 0;
};

// Scoring with the (checkpointed) population; optional per-instance dump
// (csv: index,label,predicted,matched).
TestEval evaluate_test(const Lcs& lcs, const Dataset& ds,
                       std::span<const size_t> indices,
                       std::ostream* dump = nullptr);

// Builds the condition/prediction architecture specs for a dataset.
ArchSpec make_cond_spec(const ExperimentConfig& cfg, const Dataset& ds);
ArchSpec make_pred_spec(const ExperimentConfig& cfg, const Dataset& ds);

} // namespace dxcs
