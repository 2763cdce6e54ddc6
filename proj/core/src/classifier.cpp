#include "dxcs/classifier.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "dxcs/serialize.hpp"

namespace dxcs {

Classifier make_classifier(const ArchSpec& cond_spec, const ArchSpec& pred_spec,
                           double sigma, const UpdateParams& p, uint64_t trial,
                           Rng& rng) {
    Classifier cl;
    cl.cond = init_network(cond_spec, sigma, rng);
    cl.pred = init_network(pred_spec, sigma, rng);
    cl.fitness = p.fit_init;
    cl.error = p.err_init;
    cl.set_size = 1.0;
    cl.time_stamp = trial;
    cl.created_at = trial;
    cl.last_match = trial;
    return cl;
}

bool matches(const Classifier& cl, std::span<const float> x) {
    return forward(cl.cond, x)[0] > 0.5;
}

int argmax_lowest(std::span<const double> v) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(v.size()); ++i) {
        if (v[static_cast<size_t>(i)] > v[static_cast<size_t>(best)]) best = i;
    }
    return best;
}

int classifier_loss(std::span<const double> p, std::span<const double> y) {
    return argmax_lowest(p) == argmax_lowest(y) ? 0 : 1;
}

void update_scalars(Classifier& cl, int loss, double set_size,
                    const UpdateParams& p, uint64_t trial) {
    cl.experience += 1;
    cl.error += p.beta * (loss - cl.error);
    cl.set_size += p.beta * (set_size - cl.set_size);
    cl.last_match = trial;
}

double accuracy(double epsilon, const UpdateParams& p) {
    if (epsilon < p.epsilon0) return 1.0;
    return p.alpha * std::pow(epsilon / p.epsilon0, -p.nu);
}

void serialize(const Classifier& cl, std::ostream& os) {
    serialize(cl.cond, os);
    serialize(cl.pred, os);
    BinaryWriter w(os);
    w.f64(cl.fitness);
    w.f64(cl.error);
    w.f64(cl.set_size);
    w.u64(cl.experience);
    w.i32(cl.numerosity);
    w.u64(cl.time_stamp);
    w.u64(cl.created_at);
    w.u64(cl.last_match);
}

Classifier deserialize_classifier(std::istream& is) {
    Classifier cl;
    cl.cond = deserialize_network(is);
    cl.pred = deserialize_network(is);
    BinaryReader r(is);
    cl.fitness = r.f64();
    cl.error = r.f64();
    cl.set_size = r.f64();
    cl.experience = r.u64();
    cl.numerosity = r.i32();
    cl.time_stamp = r.u64();
    cl.created_at = r.u64();
    cl.last_match = r.u64();
    return cl;
}

} // namespace dxcs
