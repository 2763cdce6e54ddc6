#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>

#include "dxcs/network.hpp"
#include "dxcs/params.hpp"

namespace dxcs {

// One XCSF rule: a gating condition network and a deep prediction network
// plus the usual bookkeeping scalars.
struct Classifier {
    Network cond; // cl.C; single linear output unit, no gradient descent
    Network pred; // cl.P; softmax output, one unit per class

    double fitness = 0.01;
    double error = 0.0;
    double set_size = 1.0; // as, match set size estimate
    uint64_t experience = 0;
    int numerosity = 1;
    uint64_t time_stamp = 0; // ts, last EA invocation
    uint64_t created_at = 0;
    uint64_t last_match = 0;

    size_t enabled_weights() const {
        return cond.enabled_weights() + pred.enabled_weights();
    }
};

Classifier make_classifier(const ArchSpec& cond_spec, const ArchSpec& pred_spec,
                           double sigma, const UpdateParams& p, uint64_t trial,
                           Rng& rng);

// The rule participates iff its condition output exceeds 0.5.
bool matches(const Classifier& cl, std::span<const float> x);

// 0/1 loss on the most likely class; argmax ties break to the lowest index.
int classifier_loss(std::span<const double> p, std::span<const double> y);

int argmax_lowest(std::span<const double> v);

// Widrow-Hoff updates for error, set-size estimate, and experience.
// Fitness is a set-level quantity and is updated in the LCS loop.
void update_scalars(Classifier& cl, int loss, double set_size,
                    const UpdateParams& p, uint64_t trial);

// kappa: 1 below the target error, else alpha * (eps/eps0)^-nu.
double accuracy(double epsilon, const UpdateParams& p);

void serialize(const Classifier& cl, std::ostream& os);
Classifier deserialize_classifier(std::istream& is);

} // namespace dxcs
