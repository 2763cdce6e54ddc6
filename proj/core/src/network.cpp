#include "dxcs/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include "dxcs/errors.hpp"
#include "dxcs/params.hpp"
#include "dxcs/serialize.hpp"

namespace dxcs {

namespace {

constexpr uint32_t kNetMagic = 0x4E4E5844; // "DXNN"
constexpr uint8_t kNetVersion = 1;

double pick_rate(Rng& rng) {
    return kMutationRateSet[static_cast<size_t>(
        rng.uniform_int(0, static_cast<int>(kMutationRateSet.size()) - 1))];
}

Shape layer_out_shape(const LayerSpec& spec, const Shape& in) {
    switch (spec.kind) {
    case LayerKind::FullyConnected:
    case LayerKind::Output:
        return Shape{spec.units, 1, 1};
    case LayerKind::Conv:
        return Shape{spec.units, in.h, in.w};
    case LayerKind::MaxPool:
        return Shape{in.c, in.h / 2, in.w / 2};
    }
    throw ConfigError("unknown layer kind");
}

int layer_inputs_per_unit(LayerKind kind, const Shape& in) {
    switch (kind) {
    case LayerKind::FullyConnected:
    case LayerKind::Output:
        return in.flat();
    case LayerKind::Conv:
        return in.c * 9;
    default:
        return 0;
    }
}

void alloc_params(Layer& l, double sigma, Rng& rng) {
    const size_t nw = static_cast<size_t>(l.n_units) * l.n_inputs;
    l.weights.resize(nw);
    for (auto& w : l.weights) w = rng.gaussian(0.0, sigma);
    l.biases.assign(static_cast<size_t>(l.n_units), 0.0);
    l.mask.assign(nw, 1);
    l.mom_w.assign(nw, 0.0);
    l.mom_b.assign(static_cast<size_t>(l.n_units), 0.0);
}

} // namespace

size_t Layer::enabled_weights() const {
    return static_cast<size_t>(std::count(mask.begin(), mask.end(), uint8_t{1}));
}

size_t Network::enabled_weights() const {
    size_t n = 0;
    for (const auto& l : layers) n += l.enabled_weights();
    return n;
}

ArchSpec condition_arch(int n_inputs) {
    ArchSpec spec;
    spec.input = Shape{1, 1, n_inputs};
    spec.layers = {
        {LayerKind::FullyConnected, Activation::Relu, 1},
        {LayerKind::Output, Activation::Linear, 1},
    };
    return spec;
}

ArchSpec prediction_fc_arch(int n_inputs, int h_i, int n_classes) {
    ArchSpec spec;
    spec.input = Shape{1, 1, n_inputs};
    for (int i = 0; i < 4; ++i) {
        spec.layers.push_back({LayerKind::FullyConnected, Activation::Relu, h_i});
    }
    spec.layers.push_back({LayerKind::Output, Activation::Softmax, n_classes});
    return spec;
}

ArchSpec prediction_conv_arch(Shape input, int h_i, int n_classes) {
    ArchSpec spec;
    spec.input = input;
    spec.layers = {
        {LayerKind::Conv, Activation::Relu, h_i},
        {LayerKind::MaxPool, Activation::None, 0},
        {LayerKind::Conv, Activation::Relu, h_i},
        {LayerKind::MaxPool, Activation::None, 0},
        {LayerKind::Conv, Activation::Relu, h_i},
        {LayerKind::Output, Activation::Softmax, n_classes},
    };
    return spec;
}

Network init_network(const ArchSpec& spec, double sigma, Rng& rng) {
    if (spec.layers.empty()) throw ConfigError("network needs at least one layer");
    if (spec.layers.back().kind != LayerKind::Output) {
        throw ConfigError("last layer must be an output layer");
    }
    if (spec.input.flat() < 1) throw ConfigError("empty input shape");
    if (sigma < 0.0) throw ConfigError("sigma must be >= 0");

    Network net;
    net.input = spec.input;
    Shape cur = spec.input;
    for (size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& ls = spec.layers[i];
        if (ls.kind == LayerKind::Output && i + 1 != spec.layers.size()) {
            throw ConfigError("output layer must be last");
        }
        Layer l;
        l.kind = ls.kind;
        l.act = ls.act;
        l.in = cur;
        if (ls.kind == LayerKind::MaxPool) {
            if (cur.h < 2 || cur.w < 2) {
                throw ConfigError("max-pool input too small");
            }
            l.act = Activation::None;
            l.n_units = cur.c;
            l.n_inputs = 0;
        } else {
            if (ls.units < 1) throw ConfigError("layer needs >= 1 unit");
            l.n_units = ls.units;
            l.n_inputs = layer_inputs_per_unit(ls.kind, cur);
            alloc_params(l, sigma, rng);
            l.eta = rng.uniform(kEtaMin, kEtaMax);
            for (auto& m : l.mu) m = pick_rate(rng);
        }
        l.out = layer_out_shape(ls, cur);
        if (l.out.flat() < 1) throw ConfigError("layer produces empty output");
        cur = l.out;
        net.layers.push_back(std::move(l));
    }
    return net;
}

namespace {

void forward_fc(const Layer& l, const std::vector<double>& x, std::vector<double>& y) {
    const int ni = l.n_inputs;
    y.resize(static_cast<size_t>(l.n_units));
    for (int u = 0; u < l.n_units; ++u) {
        const double* w = l.weights.data() + static_cast<size_t>(u) * ni;
        const double* xi = x.data();
        // four independent accumulators so the reduction vectorizes
        double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
        int i = 0;
        for (; i + 4 <= ni; i += 4) {
            a0 += w[i] * xi[i];
            a1 += w[i + 1] * xi[i + 1];
            a2 += w[i + 2] * xi[i + 2];
            a3 += w[i + 3] * xi[i + 3];
        }
        double z = l.biases[static_cast<size_t>(u)];
        for (; i < ni; ++i) z += w[i] * xi[i];
        y[static_cast<size_t>(u)] = z + ((a0 + a1) + (a2 + a3));
    }
    if (l.act == Activation::Relu) {
        for (auto& v : y) v = v > 0.0 ? v : 0.0;
    } else if (l.act == Activation::Softmax) {
        double mx = *std::max_element(y.begin(), y.end());
        double sum = 0.0;
        for (auto& v : y) {
            v = std::exp(v - mx);
            sum += v;
        }
        for (auto& v : y) v /= sum;
    }
}

void forward_conv(const Layer& l, const std::vector<double>& x, std::vector<double>& y) {
    const int C = l.in.c, H = l.in.h, W = l.in.w;
    y.assign(static_cast<size_t>(l.n_units) * H * W, 0.0);
    for (int f = 0; f < l.n_units; ++f) {
        const double* wf = l.weights.data() + static_cast<size_t>(f) * C * 9;
        double* of = y.data() + static_cast<size_t>(f) * H * W;
        for (int c = 0; c < C; ++c) {
            const double* wc = wf + static_cast<size_t>(c) * 9;
            const double* xc = x.data() + static_cast<size_t>(c) * H * W;
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    const double w = wc[ky * 3 + kx];
                    if (w == 0.0) continue;
                    const int dy = ky - 1, dx = kx - 1;
                    const int y0 = std::max(0, -dy), y1 = std::min(H, H - dy);
                    const int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
                    for (int yy = y0; yy < y1; ++yy) {
                        const double* row = xc + static_cast<size_t>(yy + dy) * W + dx;
                        double* orow = of + static_cast<size_t>(yy) * W;
                        for (int xx = x0; xx < x1; ++xx) {
                            orow[xx] += w * row[xx];
                        }
                    }
                }
            }
        }
        const double b = l.biases[static_cast<size_t>(f)];
        for (int i = 0; i < H * W; ++i) {
            double v = of[i] + b;
            of[i] = v > 0.0 ? v : 0.0; // relu
        }
    }
}

void forward_pool(const Layer& l, const std::vector<double>& x, std::vector<double>& y,
                  std::vector<int>& src) {
    const int C = l.in.c, H = l.in.h, W = l.in.w;
    const int OH = l.out.h, OW = l.out.w;
    y.resize(static_cast<size_t>(C) * OH * OW);
    src.resize(y.size());
    for (int c = 0; c < C; ++c) {
        const double* xc = x.data() + static_cast<size_t>(c) * H * W;
        for (int oy = 0; oy < OH; ++oy) {
            for (int ox = 0; ox < OW; ++ox) {
                int best = (oy * 2) * W + ox * 2;
                double bv = xc[best];
                for (int dy = 0; dy < 2; ++dy) {
                    for (int dx = 0; dx < 2; ++dx) {
                        const int idx = (oy * 2 + dy) * W + ox * 2 + dx;
                        if (xc[idx] > bv) {
                            bv = xc[idx];
                            best = idx;
                        }
                    }
                }
                const size_t o = (static_cast<size_t>(c) * OH + oy) * OW + ox;
                y[o] = bv;
                src[o] = c * H * W + best;
            }
        }
    }
}

} // namespace

const std::vector<double>& forward(const Network& net, std::span<const float> x,
                                   Trace& trace) {
    if (static_cast<int>(x.size()) != net.input.flat()) {
        throw DataError("input size does not match network input shape");
    }
    trace.act.resize(net.layers.size() + 1);
    trace.pool_src.resize(net.layers.size());
    auto& in = trace.act[0];
    in.resize(x.size());
    for (size_t i = 0; i < x.size(); ++i) in[i] = static_cast<double>(x[i]);

    for (size_t li = 0; li < net.layers.size(); ++li) {
        const Layer& l = net.layers[li];
        const auto& xin = trace.act[li];
        auto& out = trace.act[li + 1];
        switch (l.kind) {
        case LayerKind::FullyConnected:
        case LayerKind::Output:
            forward_fc(l, xin, out);
            break;
        case LayerKind::Conv:
            forward_conv(l, xin, out);
            break;
        case LayerKind::MaxPool:
            forward_pool(l, xin, out, trace.pool_src[li]);
            break;
        }
    }
    return trace.act.back();
}

std::vector<double> forward(const Network& net, std::span<const float> x) {
    Trace t;
    return forward(net, x, t);
}

void backward(const Network& net, const Trace& trace, std::span<const double> target,
              Gradients& grads) {
    const size_t nl = net.layers.size();
    if (trace.act.size() != nl + 1) {
        throw DataError("backward called without a matching forward trace");
    }
    if (static_cast<int>(target.size()) != net.n_outputs()) {
        throw DataError("target size does not match network output");
    }
    grads.dw.resize(nl);
    grads.db.resize(nl);

    // dE/dz of the current layer, walking backwards.
    std::vector<double> delta(trace.act.back().size());
    const auto& p = trace.act.back();
    for (size_t i = 0; i < delta.size(); ++i) delta[i] = p[i] - target[i];

    std::vector<double> dprev;
    for (size_t li = nl; li-- > 0;) {
        const Layer& l = net.layers[li];
        const auto& xin = trace.act[li];
        auto& dw = grads.dw[li];
        auto& db = grads.db[li];

        if (li + 1 != nl && l.act == Activation::Relu) {
            const auto& out = trace.act[li + 1];
            for (size_t i = 0; i < delta.size(); ++i) {
                if (out[i] <= 0.0) delta[i] = 0.0;
            }
        }

        switch (l.kind) {
        case LayerKind::FullyConnected:
        case LayerKind::Output: {
            const int ni = l.n_inputs;
            dw.resize(l.weights.size());
            db.resize(l.biases.size());
            dprev.assign(xin.size(), 0.0);
            for (int u = 0; u < l.n_units; ++u) {
                const double d = delta[static_cast<size_t>(u)];
                db[static_cast<size_t>(u)] = d;
                const size_t off = static_cast<size_t>(u) * ni;
                const double* w = l.weights.data() + off;
                double* g = dw.data() + off;
                if (d == 0.0) {
                    std::fill(g, g + ni, 0.0);
                    continue;
                }
                for (int i = 0; i < ni; ++i) {
                    g[i] = d * xin[static_cast<size_t>(i)];
                    dprev[static_cast<size_t>(i)] += d * w[i];
                }
            }
            break;
        }
        case LayerKind::Conv: {
            const int C = l.in.c, H = l.in.h, W = l.in.w;
            dw.assign(l.weights.size(), 0.0);
            db.assign(l.biases.size(), 0.0);
            dprev.assign(xin.size(), 0.0);
            for (int f = 0; f < l.n_units; ++f) {
                const double* df = delta.data() + static_cast<size_t>(f) * H * W;
                const double* wf = l.weights.data() + static_cast<size_t>(f) * C * 9;
                double* gf = dw.data() + static_cast<size_t>(f) * C * 9;
                double bsum = 0.0;
                for (int i = 0; i < H * W; ++i) bsum += df[i];
                db[static_cast<size_t>(f)] = bsum;
                for (int c = 0; c < C; ++c) {
                    const double* xc = xin.data() + static_cast<size_t>(c) * H * W;
                    double* dxc = dprev.data() + static_cast<size_t>(c) * H * W;
                    for (int ky = 0; ky < 3; ++ky) {
                        for (int kx = 0; kx < 3; ++kx) {
                            const int dy = ky - 1, dx = kx - 1;
                            const int y0 = std::max(0, -dy), y1 = std::min(H, H - dy);
                            const int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
                            const double w = wf[static_cast<size_t>(c) * 9 + ky * 3 + kx];
                            double gsum = 0.0;
                            for (int yy = y0; yy < y1; ++yy) {
                                const double* drow = df + static_cast<size_t>(yy) * W;
                                const double* xrow = xc + static_cast<size_t>(yy + dy) * W + dx;
                                double* dxrow = dxc + static_cast<size_t>(yy + dy) * W + dx;
                                for (int xx = x0; xx < x1; ++xx) {
                                    gsum += drow[xx] * xrow[xx];
                                    dxrow[xx] += drow[xx] * w;
                                }
                            }
                            gf[static_cast<size_t>(c) * 9 + ky * 3 + kx] = gsum;
                        }
                    }
                }
            }
            break;
        }
        case LayerKind::MaxPool: {
            dw.clear();
            db.clear();
            dprev.assign(xin.size(), 0.0);
            const auto& src = trace.pool_src[li];
            for (size_t i = 0; i < delta.size(); ++i) {
                dprev[static_cast<size_t>(src[i])] += delta[i];
            }
            break;
        }
        }

        // Disabled connections carry no gradient (branchless for the
        // vectorizer: mask is 0 or 1).
        if (l.weighted()) {
            for (size_t i = 0; i < dw.size(); ++i) {
                dw[i] *= static_cast<double>(l.mask[i]);
            }
        }
        delta.swap(dprev);
    }
}

void sgd_update(Layer& layer, const std::vector<double>& dw,
                const std::vector<double>& db, double omega) {
    if (!layer.weighted()) return;
    const double eta = layer.eta;
    for (size_t i = 0; i < layer.weights.size(); ++i) {
        // masked connections stay at zero weight and zero momentum
        const double d = (-eta * dw[i] + omega * layer.mom_w[i]) *
                         static_cast<double>(layer.mask[i]);
        layer.weights[i] += d;
        layer.mom_w[i] = d;
    }
    for (size_t i = 0; i < layer.biases.size(); ++i) {
        const double d = -layer.eta * db[i] + omega * layer.mom_b[i];
        layer.biases[i] += d;
        layer.mom_b[i] = d;
    }
}

void sgd_update(Network& net, const Gradients& grads, double omega) {
    for (size_t li = 0; li < net.layers.size(); ++li) {
        if (!net.layers[li].weighted()) continue;
        sgd_update(net.layers[li], grads.dw[li], grads.db[li], omega);
    }
}

namespace {

// Change the number of input connections per unit, keeping the leading
// old inputs and appending fresh N(0, 0.1) connections (or dropping the
// trailing ones). Valid because unit removal upstream always pops the tail.
void repack_inputs(Layer& l, int new_ni, Rng& rng) {
    const int old_ni = l.n_inputs;
    if (new_ni == old_ni) return;
    const int keep = std::min(old_ni, new_ni);
    std::vector<double> w(static_cast<size_t>(l.n_units) * new_ni);
    std::vector<double> mw(w.size(), 0.0);
    std::vector<uint8_t> m(w.size(), 1);
    for (int u = 0; u < l.n_units; ++u) {
        const size_t so = static_cast<size_t>(u) * old_ni;
        const size_t sn = static_cast<size_t>(u) * new_ni;
        for (int i = 0; i < keep; ++i) {
            w[sn + i] = l.weights[so + i];
            mw[sn + i] = l.mom_w[so + i];
            m[sn + i] = l.mask[so + i];
        }
        for (int i = keep; i < new_ni; ++i) {
            w[sn + i] = rng.gaussian(0.0, kNewWeightSd);
        }
    }
    l.weights = std::move(w);
    l.mom_w = std::move(mw);
    l.mask = std::move(m);
    l.n_inputs = new_ni;
}

// For conv layers the per-filter block is [channel][ky][kx]; channel
// add/remove is a tail operation within each filter block.
void repack_conv_channels(Layer& l, int old_c, int new_c, Rng& rng) {
    if (new_c == old_c) return;
    const int keep = std::min(old_c, new_c) * 9;
    const int old_ni = old_c * 9, new_ni = new_c * 9;
    std::vector<double> w(static_cast<size_t>(l.n_units) * new_ni);
    std::vector<double> mw(w.size(), 0.0);
    std::vector<uint8_t> m(w.size(), 1);
    for (int f = 0; f < l.n_units; ++f) {
        const size_t so = static_cast<size_t>(f) * old_ni;
        const size_t sn = static_cast<size_t>(f) * new_ni;
        for (int i = 0; i < keep; ++i) {
            w[sn + i] = l.weights[so + i];
            mw[sn + i] = l.mom_w[so + i];
            m[sn + i] = l.mask[so + i];
        }
        for (int i = keep; i < new_ni; ++i) {
            w[sn + i] = rng.gaussian(0.0, kNewWeightSd);
        }
    }
    l.weights = std::move(w);
    l.mom_w = std::move(mw);
    l.mask = std::move(m);
    l.n_inputs = new_ni;
}

} // namespace

void resize_units(Network& net, int layer_index, int delta, Rng& rng) {
    if (layer_index < 0 || layer_index + 1 >= static_cast<int>(net.layers.size())) {
        throw ConfigError("resize_units: not a hidden layer");
    }
    Layer& l = net.layers[static_cast<size_t>(layer_index)];
    if (!l.weighted()) throw ConfigError("resize_units: pool layers have no units");
    const int new_units = std::max(1, l.n_units + delta);
    if (new_units == l.n_units) return;

    if (new_units > l.n_units) {
        const size_t add = static_cast<size_t>(new_units - l.n_units);
        for (size_t u = 0; u < add; ++u) {
            for (int i = 0; i < l.n_inputs; ++i) {
                l.weights.push_back(rng.gaussian(0.0, kNewWeightSd));
                l.mom_w.push_back(0.0);
                l.mask.push_back(1);
            }
            l.biases.push_back(0.0);
            l.mom_b.push_back(0.0);
        }
    } else {
        const size_t nw = static_cast<size_t>(new_units) * l.n_inputs;
        l.weights.resize(nw);
        l.mom_w.resize(nw);
        l.mask.resize(nw);
        l.biases.resize(static_cast<size_t>(new_units));
        l.mom_b.resize(static_cast<size_t>(new_units));
    }
    l.n_units = new_units;
    l.out = (l.kind == LayerKind::Conv) ? Shape{new_units, l.in.h, l.in.w}
                                        : Shape{new_units, 1, 1};

    // Propagate the shape change through pools to the next weighted layer.
    Shape cur = l.out;
    for (size_t j = static_cast<size_t>(layer_index) + 1; j < net.layers.size(); ++j) {
        Layer& d = net.layers[j];
        const int old_channels = d.in.c;
        d.in = cur;
        if (d.kind == LayerKind::MaxPool) {
            d.n_units = cur.c;
            d.out = Shape{cur.c, cur.h / 2, cur.w / 2};
            cur = d.out;
            continue;
        }
        if (d.kind == LayerKind::Conv) {
            repack_conv_channels(d, old_channels, cur.c, rng);
        } else {
            repack_inputs(d, cur.flat(), rng);
        }
        break; // unit counts beyond this layer are unchanged
    }
}

void serialize(const Network& net, std::ostream& os) {
    BinaryWriter w(os);
    w.u32(kNetMagic);
    w.u8(kNetVersion);
    w.i32(net.input.c);
    w.i32(net.input.h);
    w.i32(net.input.w);
    w.u32(static_cast<uint32_t>(net.layers.size()));
    for (const auto& l : net.layers) {
        w.u8(static_cast<uint8_t>(l.kind));
        w.u8(static_cast<uint8_t>(l.act));
        w.i32(l.in.c); w.i32(l.in.h); w.i32(l.in.w);
        w.i32(l.out.c); w.i32(l.out.h); w.i32(l.out.w);
        w.i32(l.n_inputs);
        w.i32(l.n_units);
        w.f64(l.eta);
        for (double m : l.mu) w.f64(m);
        w.f64_vec(l.weights);
        w.f64_vec(l.biases);
        w.u8_vec(l.mask);
        w.f64_vec(l.mom_w);
        w.f64_vec(l.mom_b);
    }
}

Network deserialize_network(std::istream& is) {
    BinaryReader r(is);
    if (r.u32() != kNetMagic) throw FormatError("not a network stream");
    if (r.u8() != kNetVersion) throw FormatError("unsupported network version");
    Network net;
    net.input.c = r.i32();
    net.input.h = r.i32();
    net.input.w = r.i32();
    const uint32_t nl = r.u32();
    if (nl == 0 || nl > 1024) throw FormatError("implausible layer count");
    net.layers.resize(nl);
    for (auto& l : net.layers) {
        const uint8_t kind = r.u8();
        if (kind > static_cast<uint8_t>(LayerKind::Output)) {
            throw FormatError("bad layer kind");
        }
        l.kind = static_cast<LayerKind>(kind);
        const uint8_t act = r.u8();
        if (act > static_cast<uint8_t>(Activation::None)) {
            throw FormatError("bad activation");
        }
        l.act = static_cast<Activation>(act);
        l.in.c = r.i32(); l.in.h = r.i32(); l.in.w = r.i32();
        l.out.c = r.i32(); l.out.h = r.i32(); l.out.w = r.i32();
        l.n_inputs = r.i32();
        l.n_units = r.i32();
        if (l.n_units < 0 || l.n_inputs < 0) throw FormatError("bad layer geometry");
        l.eta = r.f64();
        for (auto& m : l.mu) m = r.f64();
        l.weights = r.f64_vec();
        l.biases = r.f64_vec();
        l.mask = r.u8_vec();
        l.mom_w = r.f64_vec();
        l.mom_b = r.f64_vec();
        if (l.weighted()) {
            const size_t nw = static_cast<size_t>(l.n_units) * l.n_inputs;
            if (l.weights.size() != nw || l.mask.size() != nw ||
                l.mom_w.size() != nw ||
                l.biases.size() != static_cast<size_t>(l.n_units) ||
                l.mom_b.size() != static_cast<size_t>(l.n_units)) {
                throw FormatError("layer array sizes inconsistent with geometry");
            }
        }
    }
    return net;
}

} // namespace dxcs
