#include <cmath>
#include <sstream>

#include <doctest.h>

#include "dxcs/errors.hpp"
#include "dxcs/evolution.hpp"
#include "dxcs/network.hpp"
#include "test_support.hpp"

using namespace dxcs;
using namespace dxcs::testing;

namespace {

Network small_fc(Rng& rng, double sigma = 0.1) {
    return init_network(prediction_fc_arch(12, 6, 4), sigma, rng);
}

Network small_conv(Rng& rng, int filters = 2, double sigma = 0.1) {
    return init_network(prediction_conv_arch(Shape{1, 8, 8}, filters, 3), sigma, rng);
}

} // namespace

TEST_CASE("init: biases zero, masks enabled, momentum zero") {
    Rng rng(1);
    const Network net = small_fc(rng);
    for (const auto& l : net.layers) {
        for (double b : l.biases) CHECK(b == 0.0);
        for (uint8_t m : l.mask) CHECK(m == 1);
        for (double m : l.mom_w) CHECK(m == 0.0);
        CHECK(l.eta >= kEtaMin);
        CHECK(l.eta <= kEtaMax);
        for (double mu : l.mu) {
            CHECK(std::count(kMutationRateSet.begin(), kMutationRateSet.end(), mu) == 1);
        }
    }
}

TEST_CASE("init: sigma 0 gives exactly zero weights") {
    Rng rng(2);
    const Network net = small_fc(rng, 0.0);
    for (const auto& l : net.layers) {
        for (double w : l.weights) CHECK(w == 0.0);
    }
}

TEST_CASE("init: weight sample statistics match N(0, 0.1)") {
    Rng rng(3);
    const Network net = init_network(prediction_fc_arch(1000, 100, 10), 0.1, rng);
    double sum = 0.0, sq = 0.0;
    size_t n = 0;
    for (const auto& l : net.layers) {
        for (double w : l.weights) {
            sum += w;
            sq += w * w;
            ++n;
        }
    }
    REQUIRE(n > 100000);
    const double mean = sum / static_cast<double>(n);
    const double sd = std::sqrt(sq / static_cast<double>(n) - mean * mean);
    CHECK(std::abs(mean) < 0.002);
    CHECK(sd > 0.095);
    CHECK(sd < 0.105);
}

TEST_CASE("forward: zero net yields uniform softmax") {
    Rng rng(4);
    Network net = init_network(prediction_fc_arch(8, 4, 10), 0.0, rng);
    const auto p = forward(net, std::vector<float>(8, 0.5f));
    for (double v : p) CHECK(v == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("forward: identity conv kernel reproduces the input") {
    Rng rng(5);
    Network net = init_network(prediction_conv_arch(Shape{1, 4, 4}, 1, 2), 0.0, rng);
    // center tap 1, everything else 0
    net.layers[0].weights[4] = 1.0;
    const auto x = random_input(16, rng);
    Trace t;
    forward(net, x, t);
    const auto& conv_out = t.act[1];
    REQUIRE(conv_out.size() == 16);
    for (size_t i = 0; i < 16; ++i) {
        CHECK(conv_out[i] == doctest::Approx(static_cast<double>(x[i])).epsilon(1e-12));
    }
}

TEST_CASE("forward matches the direct-summation oracle") {
    Rng rng(6);
    for (int rep = 0; rep < 5; ++rep) {
        Network fc = small_fc(rng);
        const auto x = random_input(12, rng);
        const auto got = forward(fc, x);
        const auto want = oracle_forward(fc, x);
        REQUIRE(got.size() == want.size());
        for (size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-10));
        }

        Network conv = small_conv(rng);
        const auto xc = random_input(64, rng);
        const auto gc = forward(conv, xc);
        const auto wc = oracle_forward(conv, xc);
        REQUIRE(gc.size() == wc.size());
        for (size_t i = 0; i < gc.size(); ++i) {
            CHECK(gc[i] == doctest::Approx(wc[i]).epsilon(1e-10));
        }
    }
}

TEST_CASE("forward: softmax output sums to one") {
    Rng rng(7);
    for (int rep = 0; rep < 20; ++rep) {
        Network net = small_fc(rng);
        const auto p = forward(net, random_input(12, rng));
        double sum = 0.0;
        for (double v : p) {
            CHECK(v >= 0.0);
            sum += v;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("forward: shape errors rejected") {
    Rng rng(8);
    Network net = small_fc(rng);
    CHECK_THROWS_AS(forward(net, std::vector<float>(5, 0.0f)), DataError);
}

TEST_CASE("backward: target equal to output gives zero output delta") {
    Rng rng(9);
    Network net = small_fc(rng);
    const auto x = random_input(12, rng);
    Trace t;
    const auto p = forward(net, x, t);
    Gradients g;
    backward(net, t, p, g);
    for (double d : g.db.back()) CHECK(d == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("backward matches central finite differences") {
    Rng rng(10);
    std::vector<double> y(4, 0.0);
    y[2] = 1.0;
    for (int rep = 0; rep < 3; ++rep) {
        Network net = small_fc(rng);
        const auto x = random_input(12, rng);
        Trace t;
        forward(net, x, t);
        Gradients g;
        backward(net, t, y, g);
        for (int li = 0; li < static_cast<int>(net.layers.size()); ++li) {
            const Layer& l = net.layers[static_cast<size_t>(li)];
            for (int s = 0; s < 10; ++s) {
                const size_t wi = static_cast<size_t>(
                    rng.uniform_int(0, static_cast<int>(l.weights.size()) - 1));
                const double fd = fd_weight_gradient(net, li, wi, x, y);
                const double an = g.dw[static_cast<size_t>(li)][wi];
                CHECK(rel_err(an, fd) <= 1e-4);
            }
            const size_t bi = static_cast<size_t>(
                rng.uniform_int(0, static_cast<int>(l.biases.size()) - 1));
            CHECK(rel_err(g.db[static_cast<size_t>(li)][bi],
                          fd_bias_gradient(net, li, bi, x, y)) <= 1e-4);
        }
    }
}

TEST_CASE("backward: masked weight has zero gradient") {
    Rng rng(11);
    Network net = small_fc(rng);
    net.layers[1].mask[3] = 0;
    net.layers[1].weights[3] = 0.0;
    const auto x = random_input(12, rng);
    Trace t;
    forward(net, x, t);
    Gradients g;
    std::vector<double> y(4, 0.0);
    y[0] = 1.0;
    backward(net, t, y, g);
    CHECK(g.dw[1][3] == 0.0);
}

TEST_CASE("backward before forward is rejected") {
    Rng rng(12);
    Network net = small_fc(rng);
    Trace t;
    Gradients g;
    std::vector<double> y(4, 0.0);
    CHECK_THROWS_AS(backward(net, t, y, g), DataError);
}

TEST_CASE("sgd_update applies the momentum weight-change rule") {
    Rng rng(13);
    Network net = init_network(prediction_fc_arch(1, 1, 2), 0.0, rng);
    Layer& l = net.layers[0];
    l.eta = 0.01;

    std::vector<double> dw{1.0};
    std::vector<double> db{0.0};
    sgd_update(l, dw, db, 0.9);
    CHECK(l.weights[0] == doctest::Approx(-0.01).epsilon(1e-12));
    CHECK(l.mom_w[0] == doctest::Approx(-0.01).epsilon(1e-12));

    // zero gradient: momentum keeps 90% of the previous step
    l.mom_w[0] = 0.5;
    dw[0] = 0.0;
    const double before = l.weights[0];
    sgd_update(l, dw, db, 0.9);
    CHECK(l.weights[0] == doctest::Approx(before + 0.45).epsilon(1e-12));
    CHECK(l.mom_w[0] == doctest::Approx(0.45).epsilon(1e-12));
}

TEST_CASE("sgd_update: eta 0 and no momentum leaves weights unchanged") {
    Rng rng(14);
    Network net = small_fc(rng);
    Network copy = net;
    Gradients g;
    Trace t;
    const auto x = random_input(12, rng);
    forward(net, x, t);
    std::vector<double> y(4, 0.0);
    y[1] = 1.0;
    backward(net, t, y, g);
    for (auto& l : net.layers) l.eta = 0.0;
    sgd_update(net, g, 0.9);
    for (size_t li = 0; li < net.layers.size(); ++li) {
        CHECK(net.layers[li].weights == copy.layers[li].weights);
    }
}

TEST_CASE("sgd_update never touches masked weights") {
    Rng rng(15);
    Network net = small_fc(rng);
    net.layers[0].mask[5] = 0;
    net.layers[0].weights[5] = 0.0;
    const auto x = random_input(12, rng);
    Trace t;
    forward(net, x, t);
    Gradients g;
    std::vector<double> y(4, 0.0);
    y[0] = 1.0;
    backward(net, t, y, g);
    sgd_update(net, g, 0.9);
    CHECK(net.layers[0].weights[5] == 0.0);
    CHECK(net.layers[0].mom_w[5] == 0.0);
}

TEST_CASE("resize_units clamps at one unit") {
    Rng rng(16);
    Network net = init_network(condition_arch(10), 0.1, rng);
    resize_units(net, 0, -5, rng);
    CHECK(net.layers[0].n_units == 1);
}

TEST_CASE("resize_units keeps fc networks consistent") {
    Rng rng(17);
    Network net = small_fc(rng);
    const auto x = random_input(12, rng);

    resize_units(net, 1, 2, rng);
    CHECK(net.layers[1].n_units == 8);
    CHECK(net.layers[2].n_inputs == 8);
    auto got = forward(net, x);
    auto want = oracle_forward(net, x);
    for (size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-10));
    }

    resize_units(net, 1, -4, rng);
    CHECK(net.layers[1].n_units == 4);
    CHECK(net.layers[2].n_inputs == 4);
    got = forward(net, x);
    want = oracle_forward(net, x);
    for (size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-10));
    }
}

TEST_CASE("resize_units propagates conv filter changes through pooling") {
    Rng rng(18);
    Network net = small_conv(rng, 2);
    const auto x = random_input(64, rng);

    resize_units(net, 0, 1, rng);
    CHECK(net.layers[0].n_units == 3);
    CHECK(net.layers[0].out.c == 3);
    CHECK(net.layers[2].in.c == 3);
    CHECK(net.layers[2].n_inputs == 27);
    auto got = forward(net, x);
    auto want = oracle_forward(net, x);
    for (size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-10));
    }

    // shrinking the conv layer feeding the fc output
    resize_units(net, 4, -1, rng);
    CHECK(net.layers[4].n_units == 1);
    CHECK(net.layers[5].n_inputs == net.layers[4].out.flat());
    got = forward(net, x);
    want = oracle_forward(net, x);
    for (size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-10));
    }
}

TEST_CASE("masked forward equals a network with the connections removed") {
    Rng rng(19);
    Network net = small_fc(rng);
    // disable a handful of connections; equivalent net zeroes them out
    Network dense = net;
    for (int k = 0; k < 10; ++k) {
        const size_t li = static_cast<size_t>(rng.uniform_int(0, 4));
        Layer& l = net.layers[li];
        const size_t wi = static_cast<size_t>(
            rng.uniform_int(0, static_cast<int>(l.weights.size()) - 1));
        l.mask[wi] = 0;
        l.weights[wi] = 0.0;
        dense.layers[li].weights[wi] = 0.0;
    }
    const auto x = random_input(12, rng);
    const auto a = forward(net, x);
    const auto b = forward(dense, x);
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
    }
}

TEST_CASE("serialize round trip is bit exact") {
    Rng rng(20);
    Network net = small_conv(rng);
    net.layers[0].mask[3] = 0;
    net.layers[0].weights[3] = 0.0;
    std::stringstream ss;
    serialize(net, ss);
    const Network back = deserialize_network(ss);
    for (size_t li = 0; li < net.layers.size(); ++li) {
        CHECK(back.layers[li].weights == net.layers[li].weights);
        CHECK(back.layers[li].biases == net.layers[li].biases);
        CHECK(back.layers[li].mask == net.layers[li].mask);
        CHECK(back.layers[li].mom_w == net.layers[li].mom_w);
        CHECK(back.layers[li].eta == net.layers[li].eta);
        CHECK(back.layers[li].mu == net.layers[li].mu);
    }
    for (int rep = 0; rep < 100; ++rep) {
        const auto x = random_input(64, rng);
        CHECK(forward(net, x) == forward(back, x));
    }
}

TEST_CASE("deserialize rejects truncated and mismatched streams") {
    Rng rng(21);
    Network net = small_fc(rng);
    std::stringstream ss;
    serialize(net, ss);
    std::string bytes = ss.str();

    std::stringstream truncated(bytes.substr(0, bytes.size() / 2));
    CHECK_THROWS_AS(deserialize_network(truncated), FormatError);

    bytes[4] = 99; // version byte
    std::stringstream wrong_version(bytes);
    CHECK_THROWS_AS(deserialize_network(wrong_version), FormatError);

    std::stringstream garbage("not a network");
    CHECK_THROWS_AS(deserialize_network(garbage), FormatError);
}

TEST_CASE("property: masked weights stay zero through mixed updates") {
    Rng rng(22);
    Network net = small_fc(rng);
    EvoParams evo;
    evo.h_max = 2;
    const std::vector<double> y{0.0, 1.0, 0.0, 0.0};
    Trace t;
    Gradients g;
    for (int step = 0; step < 500; ++step) {
        const int op = rng.uniform_int(0, 3);
        if (op == 0) {
            const auto x = random_input(12, rng);
            forward(net, x, t);
            backward(net, t, y, g);
            sgd_update(net, g, 0.9);
        } else if (op == 1) {
            mutate_network(net, evo, rng);
        } else if (op == 2) {
            resize_units(net, rng.uniform_int(0, 3), rng.uniform_int(0, 1) ? 1 : -1, rng);
        } else {
            for (auto& l : net.layers) mutate_connectivity(l, rng);
        }
        for (const auto& l : net.layers) {
            for (size_t i = 0; i < l.weights.size(); ++i) {
                if (!l.mask[i]) {
                    REQUIRE(l.weights[i] == 0.0);
                    REQUIRE(l.mom_w[i] == 0.0);
                }
            }
        }
    }
    // still shape-consistent
    const auto x = random_input(12, rng);
    const auto got = forward(net, x);
    const auto want = oracle_forward(net, x);
    for (size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-10));
    }
}

TEST_CASE("invalid architecture specs are rejected") {
    Rng rng(23);
    ArchSpec no_output;
    no_output.input = Shape{1, 1, 4};
    no_output.layers = {{LayerKind::FullyConnected, Activation::Relu, 3}};
    CHECK_THROWS_AS(init_network(no_output, 0.1, rng), ConfigError);

    CHECK_THROWS_AS(init_network(prediction_conv_arch(Shape{1, 1, 4}, 1, 2), 0.1, rng),
                    ConfigError);
}
