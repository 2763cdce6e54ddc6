#include "dxcs/evolution.hpp"

#include <algorithm>
#include <cmath>

#include "dxcs/errors.hpp"

namespace dxcs {

int roulette(std::span<const double> weights, Rng& rng) {
    if (weights.empty()) throw ConfigError("roulette over empty set");
    double total = 0.0;
    for (double w : weights) total += w;
    const double r = rng.uniform() * total;
    double acc = 0.0;
    for (size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (r < acc) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size()) - 1;
}

std::pair<int, int> select_parents_roulette(std::span<const double> fitness,
                                            Rng& rng) {
    const int a = roulette(fitness, rng);
    const int b = roulette(fitness, rng);
    return {a, b};
}

void adapt_mutation_rates(Layer& layer, Rng& rng) {
    for (auto& m : layer.mu) {
        if (rng.uniform() < kRateReselectProb) {
            m = kMutationRateSet[static_cast<size_t>(
                rng.uniform_int(0, static_cast<int>(kMutationRateSet.size()) - 1))];
        }
    }
}

void mutate_sgd_rate(Layer& layer, Rng& rng) {
    layer.eta += rng.gaussian(0.0, layer.mu[0]);
    layer.eta = std::clamp(layer.eta, kEtaMin, kEtaMax);
}

namespace {

int sample_unit_delta(int h_max, Rng& rng) {
    for (;;) {
        const double g = rng.gaussian(0.0, h_max / 2.0);
        int d = static_cast<int>(std::lround(g));
        d = std::clamp(d, -h_max, h_max);
        if (d != 0) return d;
    }
}

} // namespace

int mutate_units(Network& net, int layer_index, int h_max, Rng& rng) {
    if (layer_index + 1 >= static_cast<int>(net.layers.size())) {
        return 0; // output layer size is fixed
    }
    Layer& l = net.layers[static_cast<size_t>(layer_index)];
    if (rng.uniform(0.0, 0.1) >= l.mu[1]) return 0;
    const int before = l.n_units;
    const int delta = sample_unit_delta(h_max, rng);
    resize_units(net, layer_index, delta, rng);
    return l.n_units - before;
}

void mutate_connectivity(Layer& layer, Rng& rng) {
    for (size_t i = 0; i < layer.weights.size(); ++i) {
        if (!layer.mask[i]) {
            if (rng.uniform() < layer.mu[2]) {
                layer.mask[i] = 1;
                layer.weights[i] = rng.gaussian(0.0, kNewWeightSd);
            }
        } else if (rng.uniform() < layer.mu[3]) {
            layer.mask[i] = 0;
            layer.weights[i] = 0.0;
            layer.mom_w[i] = 0.0;
        }
    }
}

void mutate_weights(Layer& layer, Rng& rng) {
    for (size_t i = 0; i < layer.weights.size(); ++i) {
        if (layer.mask[i]) {
            layer.weights[i] += rng.gaussian(0.0, layer.mu[4]);
        }
    }
    for (auto& b : layer.biases) {
        b += rng.gaussian(0.0, layer.mu[4]);
    }
}

void mutate_network(Network& net, const EvoParams& p, Rng& rng) {
    for (int li = 0; li < static_cast<int>(net.layers.size()); ++li) {
        Layer& l = net.layers[static_cast<size_t>(li)];
        if (!l.weighted()) continue;
        adapt_mutation_rates(l, rng);
        mutate_sgd_rate(l, rng);
        mutate_units(net, li, p.h_max, rng);
        if (p.connection_mutation) {
            mutate_connectivity(net.layers[static_cast<size_t>(li)], rng);
        }
        mutate_weights(net.layers[static_cast<size_t>(li)], rng);
    }
}

std::vector<Classifier> create_offspring(const Classifier& parent1,
                                         const Classifier& parent2,
                                         const EvoParams& p, uint64_t trial,
                                         Rng& rng) {
    if (p.lambda % 2 != 0) throw ConfigError("lambda must be even");
    std::vector<Classifier> offspring;
    offspring.reserve(static_cast<size_t>(p.lambda));
    for (int i = 0; i < p.lambda / 2; ++i) {
        for (const Classifier* parent : {&parent1, &parent2}) {
            Classifier child = *parent; // Lamarckian deep copy
            mutate_network(child.cond, p, rng);
            mutate_network(child.pred, p, rng);
            child.fitness = parent->fitness * p.fit_reduction;
            child.error = parent->error * p.err_reduction;
            child.experience = 1;
            child.numerosity = 1;
            child.time_stamp = trial;
            child.created_at = trial;
            child.last_match = trial;
            offspring.push_back(std::move(child));
        }
    }
    return offspring;
}

} // namespace dxcs
