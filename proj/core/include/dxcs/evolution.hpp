#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "dxcs/classifier.hpp"
#include "dxcs/network.hpp"
#include "dxcs/params.hpp"
#include "dxcs/rng.hpp"

namespace dxcs {

// Two independent fitness-proportional draws over the given weights
// (may select the same index twice).
std::pair<int, int> select_parents_roulette(std::span<const double> fitness,
                                            Rng& rng);
int roulette(std::span<const double> weights, Rng& rng);

// Each of the five rates is independently re-drawn uniformly from the rate
// set with probability 0.1, otherwise inherited unchanged.
void adapt_mutation_rates(Layer& layer, Rng& rng);

// eta += N(0, mu[0]), clamped back into [etaMin, etaMax].
void mutate_sgd_rate(Layer& layer, Rng& rng);

// Triggered iff U[0, 0.1] < mu[1]. The unit delta is a nonzero integer in
// [-h_max, h_max]: N(0, h_max/2) rounded, clamped, resampled while zero.
// Returns the applied delta (0 if not triggered or output layer).
int mutate_units(Network& net, int layer_index, int h_max, Rng& rng);

// Per connection: disabled -> enabled with probability mu[2] (weight reset to
// N(0, 0.1)); enabled -> disabled with probability mu[3] (weight and momentum
// zeroed).
void mutate_connectivity(Layer& layer, Rng& rng);

// N(0, mu[4]) added independently to every enabled weight and every bias.
void mutate_weights(Layer& layer, Rng& rng);

// All mutation operators applied to every weighted layer of one network;
// unit mutation skips the output layer.
void mutate_network(Network& net, const EvoParams& p, Rng& rng);

// lambda offspring, deep copies of the parents (Lamarckian weights) run
// through the full mutation pipeline; fitness and error discounted.
std::vector<Classifier> create_offspring(const Classifier& parent1,
                                         const Classifier& parent2,
                                         const EvoParams& p, uint64_t trial,
                                         Rng& rng);

} // namespace dxcs
