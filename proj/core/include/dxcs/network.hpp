#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "dxcs/rng.hpp"

namespace dxcs {

// Global bounds on the per-layer gradient-descent rate.
inline constexpr double kEtaMin = 1e-4;
inline constexpr double kEtaMax = 0.01;

// Std-dev of the weight distribution used for freshly created connections
// (new units, re-enabled connections).
inline constexpr double kNewWeightSd = 0.1;

inline constexpr int kNumMutationRates = 5;

enum class LayerKind : uint8_t {
    FullyConnected,
    Conv, // 3x3 kernel, stride 1, padding 1
    MaxPool, // 2x2, stride 2
    Output, // fully connected; softmax or linear activation
};

enum class Activation : uint8_t {
    Relu,
    Linear,
    Softmax,
    None, // pool
};

struct Shape {
    int c = 1;
    int h = 1;
    int w = 1;
    int flat() const { return c * h * w; }
    bool operator==(const Shape&) const = default;
};

// Weight layout:
//   fully-connected / output: index (unit u, input i) = u * n_inputs + i
//   conv:                     index (filter f, channel c, ky, kx)
//                             = ((f * in.c + c) * 3 + ky) * 3 + kx
// mask is parallel to weights; mask[i] == 0 implies weights[i] == 0.
// Biases are one per unit and are never masked.
struct Layer {
    LayerKind kind = LayerKind::FullyConnected;
    Activation act = Activation::Relu;
    Shape in;
    Shape out;
    int n_inputs = 0; // weights per unit (fc: in.flat(); conv: in.c * 9)
    int n_units = 0; // fc: neurons; conv: kernel filters

    std::vector<double> weights;
    std::vector<double> biases;
    std::vector<uint8_t> mask;
    std::vector<double> mom_w; // previous delta-w, Eq. momentum term
    std::vector<double> mom_b;

    double eta = kEtaMin; // per-layer SGD rate
    std::array<double, kNumMutationRates> mu{}; // self-adaptive mutation rates

    bool weighted() const {
        return kind != LayerKind::MaxPool;
    }
    size_t n_weights() const { return weights.size(); }
    size_t enabled_weights() const;
};

struct LayerSpec {
    LayerKind kind;
    Activation act;
    int units = 0; // ignored for pool
};

struct ArchSpec {
    Shape input;
    std::vector<LayerSpec> layers;
};

// cl.C: one fc hidden layer (initially a single relu unit), one fixed
// linear output unit.
ArchSpec condition_arch(int n_inputs);

// cl.P fc variant: four relu hidden layers of h_i units, softmax output.
ArchSpec prediction_fc_arch(int n_inputs, int h_i, int n_classes);

// cl.P conv variant: conv -> maxpool -> conv -> maxpool -> conv, each with
// h_i filters, followed by a fully connected softmax output.
ArchSpec prediction_conv_arch(Shape input, int h_i, int n_classes);

struct Network {
    Shape input;
    std::vector<Layer> layers;

    const Layer& output_layer() const { return layers.back(); }
    int n_outputs() const { return layers.back().n_units; }
    size_t enabled_weights() const;
};

// Weights ~ N(0, sigma), biases zero, fully connected, eta ~ U[etaMin, etaMax],
// mutation rates drawn uniformly from the rate set.
Network init_network(const ArchSpec& spec, double sigma, Rng& rng);

// Per-layer forward state kept for backprop.
struct Trace {
    std::vector<std::vector<double>> act; // act[0] = input, act[i+1] = layer i output
    std::vector<std::vector<int>> pool_src; // per pool layer output cell: argmax input index
};

// Returns the output activations (reference into trace).
const std::vector<double>& forward(const Network& net, std::span<const float> x,
                                   Trace& trace);
std::vector<double> forward(const Network& net, std::span<const float> x);

struct Gradients {
    std::vector<std::vector<double>> dw;
    std::vector<std::vector<double>> db;
};

// dE/dw for softmax cross-entropy (softmax output) or squared error (linear
// output); both reduce to an output delta of p - y. Gradients of masked
// connections are exactly zero. Requires the trace of a prior forward(x).
void backward(const Network& net, const Trace& trace, std::span<const double> target,
              Gradients& grads);

// Eq. delta-w_t = -eta * dE/dw + omega * delta-w_{t-1}, applied to every
// enabled weight and every bias; masked weights are untouched.
void sgd_update(Layer& layer, const std::vector<double>& dw,
                const std::vector<double>& db, double omega);
void sgd_update(Network& net, const Gradients& grads, double omega);

// Grow or shrink a hidden layer's unit count (clamped at 1). Added units get
// N(0, 0.1) weights, zero biases, enabled mask, zero momentum; removal pops
// the most recently added units. The downstream weighted layer's input
// connections are repacked consistently.
void resize_units(Network& net, int layer_index, int delta, Rng& rng);

// Versioned binary round trip; bit-exact for all fields.
void serialize(const Network& net, std::ostream& os);
Network deserialize_network(std::istream& is);

} // namespace dxcs
