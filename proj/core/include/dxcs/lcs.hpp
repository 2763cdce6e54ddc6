#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "dxcs/classifier.hpp"
#include "dxcs/evolution.hpp"
#include "dxcs/params.hpp"

namespace dxcs {

struct LcsParams {
    UpdateParams upd;
    EvoParams evo;
    int pop_max = 500; // N, in micro-classifiers
    bool adaptive_pop = false; // adjust N to keep mean |[M]| in [100, 200]
    bool ea_control = false; // [M] := [P], covering disabled
    bool pop_init = true; // seed [P] with N random classifiers
    double omega = 0.9; // SGD momentum
    double sigma_init = 0.1;
    double sigma_cover = 1.0;
    uint64_t cover_attempt_cap = 1000000;
    uint64_t stale_trials = 10000; // unmatched-rule removal age
};

inline constexpr int kAdaptivePopMin = 200;
inline constexpr int kAdaptivePopMax = 5000;
inline constexpr double kAdaptiveMsetLow = 100.0;
inline constexpr double kAdaptiveMsetHigh = 200.0;

struct TrialRecord {
    int loss = 0; // system 0/1 loss
    int match_size = 0; // |[M]| in micro-classifiers
    uint64_t covering_attempts = 0;
    bool ea_ran = false;
};

// Checkpoint file contents: header plus the serialized classifiers.
struct Checkpoint {
    uint64_t config_hash = 0;
    uint64_t trial = 0;
    int pop_max = 0;
    double sys_err_ma = 0.0;
    double mset_ma = 0.0;
    std::vector<Classifier> classifiers;
};

Checkpoint read_checkpoint(std::istream& is);

// vote = as * num, inflated by meanF/F for experienced low-fitness rules.
double deletion_vote(const Classifier& cl, double pop_mean_fitness,
                     const UpdateParams& p);

// The XCSF main loop over a population of classifiers.
class Lcs {
public:
    Lcs(LcsParams params, ArchSpec cond_spec, ArchSpec pred_spec, uint64_t seed);

    // P_init: N random classifiers (no-op when pop_init is false).
    void init_population();

    // Match set as indices into the population; runs covering (and the
    // subsequent limit enforcement) when nothing matches.
    std::vector<int> build_match_set(std::span<const float> x,
                                     uint64_t* covering_attempts = nullptr);

    // Fitness- and numerosity-weighted average of member predictions.
    std::vector<double> system_prediction(const std::vector<int>& mset,
                                          std::span<const float> x) const;

    // One learning trial: matching, prediction, scalar updates, SGD on each
    // member's prediction network, then possibly the EA.
    TrialRecord run_trial(std::span<const float> x, std::span<const double> y);

    // Scoring-time prediction: no covering, no updates. Returns false and
    // leaves `out` empty when nothing matches.
    bool predict(std::span<const float> x, std::vector<double>& out) const;

    void enforce_population_limit(std::vector<int>* protect = nullptr);
    void adapt_population_size();

    double mean_fitness() const; // sum F / sum num over [P]
    int total_numerosity() const;

    std::vector<Classifier>& population() { return pop_; }
    const std::vector<Classifier>& population() const { return pop_; }
    const LcsParams& params() const { return params_; }
    uint64_t trial() const { return trial_; }
    int pop_limit() const { return pop_max_; }
    double system_error_ma() const { return sys_err_ma_; }
    double match_set_ma() const { return mset_ma_; }
    Rng& rng() { return rng_; }

    // Test/driver hooks.
    void set_trial(uint64_t t) { trial_ = t; }
    void set_system_error_ma(double v) { sys_err_ma_ = v; }
    void set_match_set_ma(double v) { mset_ma_ = v; }
    void set_pop_limit(int n) { pop_max_ = n; }

    void save(std::ostream& os, uint64_t config_hash) const;
    // Restores population and loop state; returns the stored config hash.
    uint64_t load(std::istream& is);

private:
    void update_match_set(const std::vector<int>& mset,
                          const std::vector<std::vector<double>>& preds,
                          std::span<const float> x, std::span<const double> y);
    bool maybe_run_ea(std::vector<int>& mset);
    void remove_micro(int index, std::vector<int>* protect);

    LcsParams params_;
    ArchSpec cond_spec_;
    ArchSpec pred_spec_;
    Rng rng_;
    std::vector<Classifier> pop_;
    int pop_max_;
    uint64_t trial_ = 0;
    double sys_err_ma_ = 0.0;
    double mset_ma_ = 0.0;
};

} // namespace dxcs
