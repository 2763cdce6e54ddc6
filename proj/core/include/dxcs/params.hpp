#pragma once

#include <array>
#include <cstdint>

namespace dxcs {

// The fixed set the self-adaptive mutation rates are drawn from.
inline constexpr std::array<double, 10> kMutationRateSet = {
    0.0005, 0.001, 0.002, 0.003, 0.005, 0.01, 0.015, 0.02, 0.05, 0.1,
};

// Probability that a rate is re-selected from the set on reproduction.
inline constexpr double kRateReselectProb = 0.1;

// Widrow-Hoff / accuracy / deletion parameters.
struct UpdateParams {
    double beta = 0.05; // update rate for fitness, error, set size
    double epsilon0 = 0.01; // target error
    double alpha = 1.0; // accuracy offset (1 = disabled)
    double nu = 5.0; // accuracy slope
    uint64_t theta_del = 100; // deletion experience threshold
    double delta = 0.1; // low-fitness deletion vote fraction
    double fit_init = 0.01;
    double err_init = 0.0;
};

struct EvoParams {
    int lambda = 2; // offspring per EA invocation (even)
    double theta_ea = 100.0; // mean set time between invocations
    double fit_reduction = 0.1; // F_R
    double err_reduction = 1.0; // eps_R (1 = disabled)
    int h_max = 1; // max units added/removed per mutation event
    bool connection_mutation = true;
};

} // namespace dxcs
