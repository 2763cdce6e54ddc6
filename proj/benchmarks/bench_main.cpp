// Microbenchmarks for the hot paths: network kernels, mutation pipeline,
// and whole learning trials.

#include <benchmark/benchmark.h>

#include "dxcs/evolution.hpp"
#include "dxcs/lcs.hpp"

using namespace dxcs;

namespace {

std::vector<float> random_input(int n, Rng& rng) {
    std::vector<float> x(static_cast<size_t>(n));
    for (auto& v : x) v = static_cast<float>(rng.uniform());
    return x;
}

void BM_FcForward(benchmark::State& state) {
    const int n_in = static_cast<int>(state.range(0));
    Rng rng(1);
    Network net = init_network(prediction_fc_arch(n_in, 20, 10), 0.1, rng);
    const auto x = random_input(n_in, rng);
    Trace tr;
    for (auto _ : state) {
        benchmark::DoNotOptimize(forward(net, x, tr));
    }
}
BENCHMARK(BM_FcForward)->Arg(64)->Arg(784);

void BM_FcForwardBackwardSgd(benchmark::State& state) {
    const int n_in = static_cast<int>(state.range(0));
    Rng rng(2);
    Network net = init_network(prediction_fc_arch(n_in, 20, 10), 0.1, rng);
    const auto x = random_input(n_in, rng);
    std::vector<double> y(10, 0.0);
    y[3] = 1.0;
    Trace tr;
    Gradients g;
    for (auto _ : state) {
        forward(net, x, tr);
        backward(net, tr, y, g);
        sgd_update(net, g, 0.9);
    }
}
BENCHMARK(BM_FcForwardBackwardSgd)->Arg(64)->Arg(784);

void BM_ConvForward(benchmark::State& state) {
    Rng rng(3);
    Network net = init_network(prediction_conv_arch({1, 28, 28}, 16, 10), 0.1, rng);
    const auto x = random_input(28 * 28, rng);
    Trace tr;
    for (auto _ : state) {
        benchmark::DoNotOptimize(forward(net, x, tr));
    }
}
BENCHMARK(BM_ConvForward);

void BM_ConvForwardBackwardSgd(benchmark::State& state) {
    Rng rng(4);
    Network net = init_network(prediction_conv_arch({1, 28, 28}, 16, 10), 0.1, rng);
    const auto x = random_input(28 * 28, rng);
    std::vector<double> y(10, 0.0);
    y[3] = 1.0;
    Trace tr;
    Gradients g;
    for (auto _ : state) {
        forward(net, x, tr);
        backward(net, tr, y, g);
        sgd_update(net, g, 0.9);
    }
}
BENCHMARK(BM_ConvForwardBackwardSgd);

void BM_MutateNetwork(benchmark::State& state) {
    Rng rng(5);
    Network net = init_network(prediction_fc_arch(784, 20, 10), 0.1, rng);
    EvoParams ep;
    for (auto _ : state) {
        mutate_network(net, ep, rng);
    }
}
BENCHMARK(BM_MutateNetwork);

void BM_Matching(benchmark::State& state) {
    Rng rng(6);
    UpdateParams up;
    std::vector<Classifier> pop;
    for (int i = 0; i < 200; ++i) {
        pop.push_back(make_classifier(condition_arch(784),
                                      prediction_fc_arch(784, 20, 10), 1.0, up, 0,
                                      rng));
    }
    const auto x = random_input(784, rng);
    for (auto _ : state) {
        int hits = 0;
        for (const auto& cl : pop) hits += matches(cl, x);
        benchmark::DoNotOptimize(hits);
    }
}
BENCHMARK(BM_Matching);

void BM_RunTrial(benchmark::State& state) {
    LcsParams p;
    p.pop_max = static_cast<int>(state.range(0));
    Lcs lcs(p, condition_arch(64), prediction_fc_arch(64, 20, 10), 7);
    lcs.init_population();
    Rng data(8);
    for (auto _ : state) {
        state.PauseTiming();
        const auto x = random_input(64, data);
        std::vector<double> y(10, 0.0);
        y[static_cast<size_t>(data.uniform_int(0, 9))] = 1.0;
        state.ResumeTiming();
        benchmark::DoNotOptimize(lcs.run_trial(x, y));
    }
}
BENCHMARK(BM_RunTrial)->Arg(50)->Arg(200);

} // namespace

BENCHMARK_MAIN();
