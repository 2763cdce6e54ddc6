#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dxcs/network.hpp"
#include "dxcs/rng.hpp"

namespace dxcs {

// Immutable after load; features normalized to [0, 1].
struct Dataset {
    std::vector<float> features; // row-major, instance * shape.flat()
    std::vector<int> labels;
    Shape shape;
    int n_classes = 0;

    size_t size() const { return labels.size(); }
    std::span<const float> instance(size_t i) const {
        const size_t n = static_cast<size_t>(shape.flat());
        return {features.data() + i * n, n};
    }
};

// IDX image/label pair (the MNIST container format); pixels divided by 255.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

struct CsvSchema {
    bool has_header = false;
    int label_column = -1; // -1 = last column
    int image_side = 0; // 0 = flat features; else side x side single channel
};

// Numeric CSV with one label column; features min-max rescaled to [0, 1]
// over the observed range (constant columns map to 0). The detected source
// range is reported through *detected_lo / *detected_hi when non-null.
Dataset load_csv(const std::string& path, const CsvSchema& schema,
                 double* detected_lo = nullptr, double* detected_hi = nullptr);

// Canonical internal binary cache; round trips exactly.
void save_cache(const Dataset& ds, const std::string& path);
Dataset load_cache(const std::string& path);

struct SplitPlan {
    std::vector<size_t> train;
    std::vector<size_t> validation;
    std::vector<size_t> test; // empty when the test set is a separate file
};

enum class SplitKind {
    ShuffledHoldout, // 90/10 train/test, then 10% of train -> validation
    TrainValidation, // 10% of the set -> validation, rest train
};

SplitPlan make_splits(const Dataset& ds, SplitKind kind, uint64_t seed);

// k distinct indices drawn uniformly from `pool` (k >= pool size returns a
// permutation of the pool).
std::vector<size_t> sample_without_replacement(std::span<const size_t> pool,
                                               size_t k, Rng& rng);

void one_hot(int label, int n_classes, std::vector<double>& out);

} // namespace dxcs
