#pragma once

#include <cstdint>
#include <random>

namespace dxcs {

// Single-stream RNG; every stochastic component takes one of these explicitly
// so runs are replayable from the experiment seed.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    double uniform() {
        return std::uniform_real_distribution<double>(0.0, 1.0)(gen_);
    }

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(gen_);
    }

    // inclusive bounds
    int uniform_int(int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(gen_);
    }

    double gaussian(double mean, double sd) {
        if (sd <= 0.0) {
            return mean;
        }
        return std::normal_distribution<double>(mean, sd)(gen_);
    }

    // Derive an independent seed, e.g. for a sub-component stream.
    uint64_t split() {
        return std::uniform_int_distribution<uint64_t>()(gen_);
    }

    std::mt19937_64& engine() { return gen_; }

private:
    std::mt19937_64 gen_;
};

} // namespace dxcs
