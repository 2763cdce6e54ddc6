#include <algorithm>
#include <cmath>
#include <set>

#include <doctest.h>

#include "dxcs/evolution.hpp"
#include "test_support.hpp"

using namespace dxcs;
using namespace dxcs::testing;

namespace {

Network fc_net(Rng& rng, int n_in = 6, int h = 4, int n_out = 3) {
    return init_network(prediction_fc_arch(n_in, h, n_out), 0.1, rng);
}

} // namespace

TEST_CASE("roulette: selection frequency is fitness-proportional") {
    Rng rng(11);
    const std::vector<double> fit{3.0, 1.0};
    int first = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        if (roulette(fit, rng) == 0) ++first;
    }
    const double frac = static_cast<double>(first) / n;
    CHECK(std::abs(frac - 0.75) <= 0.02);
}

TEST_CASE("roulette: zero-weight entries are never selected") {
    Rng rng(12);
    const std::vector<double> fit{0.0, 1.0, 0.0};
    for (int i = 0; i < 1000; ++i) {
        CHECK(roulette(fit, rng) == 1);
    }
}

TEST_CASE("select_parents_roulette can pick the same parent twice") {
    Rng rng(13);
    const std::vector<double> fit{1.0, 1.0};
    bool same = false, diff = false;
    for (int i = 0; i < 200 && !(same && diff); ++i) {
        const auto [a, b] = select_parents_roulette(fit, rng);
        CHECK(a >= 0);
        CHECK(a < 2);
        CHECK(b >= 0);
        CHECK(b < 2);
        (a == b ? same : diff) = true;
    }
    CHECK(same);
    CHECK(diff);
}

TEST_CASE("adapt_mutation_rates: reselect frequency 0.10 and set membership") {
    Rng rng(14);
    Network net = fc_net(rng);
    Layer& l = net.layers[0];
    const int trials = 100000;
    long changed_slots = 0;
    long seen_slots = 0;
    for (int t = 0; t < trials; ++t) {
        const auto before = l.mu;
        adapt_mutation_rates(l, rng);
        for (int k = 0; k < kNumMutationRates; ++k) {
            ++seen_slots;
            if (l.mu[k] != before[k]) ++changed_slots;
            CHECK(std::find(kMutationRateSet.begin(), kMutationRateSet.end(),
                            l.mu[k]) != kMutationRateSet.end());
        }
    }
    // Re-draws can land on the incumbent value (1/10 of the time), so the
    // observable change rate is 0.1 * 9/10 = 0.09.
    const double frac = static_cast<double>(changed_slots) / seen_slots;
    CHECK(std::abs(frac - 0.09) <= 0.005);
}

TEST_CASE("mutate_sgd_rate stays clamped to the eta interval") {
    Rng rng(15);
    Network net = fc_net(rng);
    Layer& l = net.layers[0];
    l.mu[0] = 0.1; // large steps to exercise both clamps
    bool hit_low = false, hit_high = false;
    for (int i = 0; i < 10000; ++i) {
        mutate_sgd_rate(l, rng);
        CHECK(l.eta >= kEtaMin);
        CHECK(l.eta <= kEtaMax);
        if (l.eta == kEtaMin) hit_low = true;
        if (l.eta == kEtaMax) hit_high = true;
    }
    CHECK(hit_low);
    CHECK(hit_high);
}

TEST_CASE("mutate_units: h_max=1 deltas are exactly -1 or +1") {
    Rng rng(16);
    std::set<int> seen;
    for (int i = 0; i < 2000; ++i) {
        Network net = fc_net(rng, 6, 4, 3);
        net.layers[0].mu[1] = 0.1; // always trigger
        const int d = mutate_units(net, 0, 1, rng);
        CHECK(d != 0);
        CHECK(std::abs(d) == 1);
        seen.insert(d);
        CHECK(net.layers[0].n_units == 4 + d);
        CHECK(net.layers[1].n_inputs == 4 + d);
    }
    CHECK(seen.count(-1) == 1);
    CHECK(seen.count(1) == 1);
}

TEST_CASE("mutate_units: h_max=4 deltas are nonzero and bounded") {
    Rng rng(17);
    for (int i = 0; i < 2000; ++i) {
        Network net = fc_net(rng, 6, 10, 3);
        net.layers[0].mu[1] = 0.1;
        const int d = mutate_units(net, 0, 4, rng);
        CHECK(d != 0);
        CHECK(d >= -4);
        CHECK(d <= 4);
    }
}

TEST_CASE("mutate_units never triggers when mu2 is the smallest rate") {
    Rng rng(18);
    // trigger draw is U[0, 0.1]; with mu2 = 0.0005 the expected rate is 0.5%
    int fired = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        Network net = fc_net(rng);
        net.layers[0].mu[1] = 0.0005;
        if (mutate_units(net, 0, 1, rng) != 0) ++fired;
    }
    const double frac = static_cast<double>(fired) / n;
    CHECK(std::abs(frac - 0.005) <= 0.003);
}

TEST_CASE("mutate_units leaves the output layer alone") {
    Rng rng(19);
    Network net = fc_net(rng);
    const int out = static_cast<int>(net.layers.size()) - 1;
    net.layers[static_cast<size_t>(out)].mu[1] = 0.1;
    for (int i = 0; i < 100; ++i) {
        CHECK(mutate_units(net, out, 4, rng) == 0);
    }
    CHECK(net.layers[static_cast<size_t>(out)].n_units == 3);
}

TEST_CASE("mutate_connectivity: disable frequency matches mu4") {
    Rng rng(20);
    Network net = fc_net(rng, 50, 40, 10);
    Layer& l = net.layers[0];
    l.mu[2] = 0.0; // no re-enabling
    l.mu[3] = 0.05;
    long disabled = 0, exposed = 0;
    while (exposed < 100000) {
        // reset to fully enabled so every connection is at risk each round
        std::fill(l.mask.begin(), l.mask.end(), true);
        mutate_connectivity(l, rng);
        exposed += static_cast<long>(l.mask.size());
        for (size_t i = 0; i < l.mask.size(); ++i) {
            if (!l.mask[i]) {
                ++disabled;
                CHECK(l.weights[i] == 0.0);
                CHECK(l.mom_w[i] == 0.0);
            }
        }
    }
    const double frac = static_cast<double>(disabled) / exposed;
    CHECK(std::abs(frac - 0.05) <= 0.002);
}

TEST_CASE("mutate_connectivity: enabled connections get fresh N(0, 0.1) weights") {
    Rng rng(21);
    Network net = fc_net(rng, 50, 40, 10);
    Layer& l = net.layers[0];
    l.mu[2] = 1.0; // force every connection on in one pass
    l.mu[3] = 0.0;
    std::fill(l.mask.begin(), l.mask.end(), false);
    std::fill(l.weights.begin(), l.weights.end(), 0.0);
    mutate_connectivity(l, rng);
    double sum = 0.0, sq = 0.0;
    for (size_t i = 0; i < l.mask.size(); ++i) {
        CHECK(l.mask[i]);
        sum += l.weights[i];
        sq += l.weights[i] * l.weights[i];
    }
    const double n = static_cast<double>(l.weights.size());
    const double mean = sum / n;
    const double sd = std::sqrt(sq / n - mean * mean);
    CHECK(std::abs(mean) <= 0.01);
    CHECK(std::abs(sd - kNewWeightSd) <= 0.01);
}

TEST_CASE("mutate_weights: perturbation spread matches mu5") {
    Rng rng(22);
    Network net = fc_net(rng, 50, 40, 10);
    Layer& l = net.layers[0];
    l.mu[4] = 0.1;
    const auto before = l.weights;
    mutate_weights(l, rng);
    double sum = 0.0, sq = 0.0;
    for (size_t i = 0; i < l.weights.size(); ++i) {
        const double d = l.weights[i] - before[i];
        sum += d;
        sq += d * d;
    }
    const double n = static_cast<double>(l.weights.size());
    const double mean = sum / n;
    const double sd = std::sqrt(sq / n - mean * mean);
    CHECK(std::abs(mean) <= 0.01);
    CHECK(std::abs(sd - 0.1) <= 0.003);
}

TEST_CASE("mutate_weights skips disabled connections but not biases") {
    Rng rng(23);
    Network net = fc_net(rng);
    Layer& l = net.layers[0];
    l.mu[4] = 0.1;
    std::fill(l.mask.begin(), l.mask.end(), false);
    std::fill(l.weights.begin(), l.weights.end(), 0.0);
    const auto biases_before = l.biases;
    mutate_weights(l, rng);
    for (const double w : l.weights) CHECK(w == 0.0);
    bool bias_moved = false;
    for (size_t i = 0; i < l.biases.size(); ++i) {
        if (l.biases[i] != biases_before[i]) bias_moved = true;
    }
    CHECK(bias_moved);
}

TEST_CASE("create_offspring: counts, discounts, and bookkeeping") {
    Rng rng(24);
    UpdateParams up;
    Classifier p1 = make_classifier(condition_arch(6), prediction_fc_arch(6, 4, 3),
                                    0.1, up, 0, rng);
    Classifier p2 = make_classifier(condition_arch(6), prediction_fc_arch(6, 4, 3),
                                    0.1, up, 0, rng);
    p1.fitness = 0.8;
    p1.error = 0.2;
    p2.fitness = 0.4;
    p2.error = 0.3;
    EvoParams ep;
    ep.lambda = 4;
    const auto kids = create_offspring(p1, p2, ep, 123, rng);
    REQUIRE(kids.size() == 4);
    for (size_t i = 0; i < kids.size(); ++i) {
        const Classifier& parent = (i % 2 == 0) ? p1 : p2;
        const Classifier& k = kids[i];
        CHECK(k.fitness == doctest::Approx(parent.fitness * ep.fit_reduction));
        CHECK(k.error == doctest::Approx(parent.error * ep.err_reduction));
        CHECK(k.numerosity == 1);
        CHECK(k.experience == 1);
        CHECK(k.time_stamp == 123);
        CHECK(k.created_at == 123);
        CHECK(k.pred.layers.size() == parent.pred.layers.size());
    }
}

TEST_CASE("create_offspring copies are independent of the parents") {
    Rng rng(25);
    UpdateParams up;
    Classifier p1 = make_classifier(condition_arch(4), prediction_fc_arch(4, 3, 2),
                                    0.1, up, 0, rng);
    EvoParams ep;
    auto kids = create_offspring(p1, p1, ep, 1, rng);
    const auto x = random_input(4, rng);
    const auto before = forward(p1.pred, x);
    // hammer the child; the parent must not move
    for (auto& l : kids[0].pred.layers) {
        std::fill(l.weights.begin(), l.weights.end(), 9.0);
    }
    CHECK(forward(p1.pred, x) == before);
}

TEST_CASE("mutate_network keeps eta and mu within their domains") {
    Rng rng(26);
    Network net = fc_net(rng);
    EvoParams ep;
    for (int round = 0; round < 200; ++round) {
        mutate_network(net, ep, rng);
        for (const Layer& l : net.layers) {
            if (!l.weighted()) continue;
            CHECK(l.eta >= kEtaMin);
            CHECK(l.eta <= kEtaMax);
            for (int k = 0; k < kNumMutationRates; ++k) {
                CHECK(std::find(kMutationRateSet.begin(), kMutationRateSet.end(),
                                l.mu[k]) != kMutationRateSet.end());
            }
            for (size_t i = 0; i < l.weights.size(); ++i) {
                if (!l.mask[i]) CHECK(l.weights[i] == 0.0);
            }
        }
    }
}
