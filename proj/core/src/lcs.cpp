#include "dxcs/lcs.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>

#include "dxcs/errors.hpp"
#include "dxcs/serialize.hpp"

namespace dxcs {

namespace {
constexpr uint32_t kCheckpointMagic = 0x4B505844; // "DXPK"
constexpr uint8_t kCheckpointVersion = 1;
} // namespace

double deletion_vote(const Classifier& cl, double pop_mean_fitness,
                     const UpdateParams& p) {
    double vote = cl.set_size * cl.numerosity;
    if (cl.experience > p.theta_del && cl.fitness < p.delta * pop_mean_fitness) {
        vote *= pop_mean_fitness / cl.fitness;
    }
    return vote;
}

Lcs::Lcs(LcsParams params, ArchSpec cond_spec, ArchSpec pred_spec, uint64_t seed)
    : params_(std::move(params)),
      cond_spec_(std::move(cond_spec)),
      pred_spec_(std::move(pred_spec)),
      rng_(seed),
      pop_max_(params_.pop_max) {}

void Lcs::init_population() {
    if (!params_.pop_init) return;
    pop_.reserve(static_cast<size_t>(pop_max_));
    for (int i = 0; i < pop_max_; ++i) {
        pop_.push_back(make_classifier(cond_spec_, pred_spec_, params_.sigma_init,
                                       params_.upd, trial_, rng_));
    }
}

int Lcs::total_numerosity() const {
    int n = 0;
    for (const auto& cl : pop_) n += cl.numerosity;
    return n;
}

double Lcs::mean_fitness() const {
    double f = 0.0;
    int n = 0;
    for (const auto& cl : pop_) {
        f += cl.fitness;
        n += cl.numerosity;
    }
    return n > 0 ? f / n : 0.0;
}

std::vector<int> Lcs::build_match_set(std::span<const float> x,
                                      uint64_t* covering_attempts) {
    std::vector<int> mset;
    if (params_.ea_control) {
        mset.resize(pop_.size());
        std::iota(mset.begin(), mset.end(), 0);
        return mset;
    }
    uint64_t attempts = 0;
    for (;;) {
        mset.clear();
        for (size_t i = 0; i < pop_.size(); ++i) {
            if (matches(pop_[i], x)) mset.push_back(static_cast<int>(i));
        }
        if (!mset.empty()) break;
        // Covering: generate random classifiers until one matches; only the
        // matching one is inserted.
        for (;;) {
            if (++attempts > params_.cover_attempt_cap) {
                throw ConfigError("covering attempt cap exceeded; "
                                  "degenerate configuration");
            }
            Classifier cl = make_classifier(cond_spec_, pred_spec_,
                                            params_.sigma_cover, params_.upd,
                                            trial_, rng_);
            if (matches(cl, x)) {
                pop_.push_back(std::move(cl));
                break;
            }
        }
        mset.assign(1, static_cast<int>(pop_.size()) - 1);
        enforce_population_limit(&mset);
        if (!mset.empty()) break;
        // enforcement deleted the covered rule; try again
    }
    if (covering_attempts) *covering_attempts = attempts;
    return mset;
}

std::vector<double> Lcs::system_prediction(const std::vector<int>& mset,
                                           std::span<const float> x) const {
    std::vector<double> sum(static_cast<size_t>(pred_spec_.layers.back().units), 0.0);
    double wsum = 0.0;
    for (int idx : mset) {
        const Classifier& cl = pop_[static_cast<size_t>(idx)];
        const auto p = forward(cl.pred, x);
        const double w = cl.fitness * cl.numerosity;
        for (size_t i = 0; i < sum.size(); ++i) sum[i] += w * p[i];
        wsum += w;
    }
    if (wsum > 0.0) {
        for (auto& v : sum) v /= wsum;
    }
    return sum;
}

bool Lcs::predict(std::span<const float> x, std::vector<double>& out) const {
    std::vector<int> mset;
    if (params_.ea_control) {
        mset.resize(pop_.size());
        std::iota(mset.begin(), mset.end(), 0);
    } else {
        for (size_t i = 0; i < pop_.size(); ++i) {
            if (matches(pop_[i], x)) mset.push_back(static_cast<int>(i));
        }
    }
    if (mset.empty()) {
        out.clear();
        return false;
    }
    out = system_prediction(mset, x);
    return true;
}

void Lcs::update_match_set(const std::vector<int>& mset,
                           const std::vector<std::vector<double>>& preds,
                           std::span<const float> x, std::span<const double> y) {
    double set_size = 0.0;
    for (int idx : mset) set_size += pop_[static_cast<size_t>(idx)].numerosity;

    std::vector<double> kappa_num(mset.size());
    double kappa_sum = 0.0;
    for (size_t j = 0; j < mset.size(); ++j) {
        Classifier& cl = pop_[static_cast<size_t>(mset[j])];
        const int loss = classifier_loss(preds[j], y);
        update_scalars(cl, loss, set_size, params_.upd, trial_);
        kappa_num[j] = accuracy(cl.error, params_.upd) * cl.numerosity;
        kappa_sum += kappa_num[j];
    }
    for (size_t j = 0; j < mset.size(); ++j) {
        Classifier& cl = pop_[static_cast<size_t>(mset[j])];
        const double rel_acc = kappa_num[j] / kappa_sum;
        cl.fitness += params_.upd.beta * (rel_acc - cl.fitness);
    }
}

TrialRecord Lcs::run_trial(std::span<const float> x, std::span<const double> y) {
    TrialRecord rec;
    std::vector<int> mset = build_match_set(x, &rec.covering_attempts);

    for (int idx : mset) rec.match_size += pop_[static_cast<size_t>(idx)].numerosity;
    mset_ma_ += params_.upd.beta * (rec.match_size - mset_ma_);

    // Per-member predictions (pre-update) plus the SGD refinement of each
    // cl.P; member updates are independent so a single pass is exact.
    std::vector<std::vector<double>> preds(mset.size());
    Trace trace;
    Gradients grads;
    for (size_t j = 0; j < mset.size(); ++j) {
        Classifier& cl = pop_[static_cast<size_t>(mset[j])];
        preds[j] = forward(cl.pred, x, trace);
        backward(cl.pred, trace, y, grads);
        sgd_update(cl.pred, grads, params_.omega);
    }

    std::vector<double> sys_p(preds.front().size(), 0.0);
    double wsum = 0.0;
    for (size_t j = 0; j < mset.size(); ++j) {
        const Classifier& cl = pop_[static_cast<size_t>(mset[j])];
        const double w = cl.fitness * cl.numerosity;
        for (size_t i = 0; i < sys_p.size(); ++i) sys_p[i] += w * preds[j][i];
        wsum += w;
    }
    for (auto& v : sys_p) v /= wsum;
    rec.loss = classifier_loss(sys_p, y);
    sys_err_ma_ += params_.upd.beta * (rec.loss - sys_err_ma_);

    update_match_set(mset, preds, x, y);
    rec.ea_ran = maybe_run_ea(mset);
    trial_ += 1;
    return rec;
}

bool Lcs::maybe_run_ea(std::vector<int>& mset) {
    if (mset.empty()) return false;
    double ts_num = 0.0;
    double num = 0.0;
    for (int idx : mset) {
        const Classifier& cl = pop_[static_cast<size_t>(idx)];
        ts_num += static_cast<double>(cl.time_stamp) * cl.numerosity;
        num += cl.numerosity;
    }
    if (static_cast<double>(trial_) - ts_num / num <= params_.evo.theta_ea) {
        return false;
    }
    for (int idx : mset) pop_[static_cast<size_t>(idx)].time_stamp = trial_;

    std::vector<double> fit(mset.size());
    for (size_t j = 0; j < mset.size(); ++j) {
        fit[j] = pop_[static_cast<size_t>(mset[j])].fitness;
    }
    const auto [a, b] = select_parents_roulette(fit, rng_);
    auto offspring = create_offspring(pop_[static_cast<size_t>(mset[static_cast<size_t>(a)])],
                                      pop_[static_cast<size_t>(mset[static_cast<size_t>(b)])],
                                      params_.evo, trial_, rng_);
    for (auto& child : offspring) pop_.push_back(std::move(child));
    if (params_.adaptive_pop) adapt_population_size();
    enforce_population_limit(&mset);
    return true;
}

void Lcs::adapt_population_size() {
    if (mset_ma_ < kAdaptiveMsetLow && pop_max_ < kAdaptivePopMax) {
        pop_max_ += 1;
    } else if (mset_ma_ > kAdaptiveMsetHigh && pop_max_ > kAdaptivePopMin) {
        pop_max_ -= 1;
    }
}

void Lcs::remove_micro(int index, std::vector<int>* protect) {
    Classifier& cl = pop_[static_cast<size_t>(index)];
    cl.numerosity -= 1;
    if (cl.numerosity >= 1) return;
    pop_.erase(pop_.begin() + index);
    if (protect) {
        auto& m = *protect;
        m.erase(std::remove(m.begin(), m.end(), index), m.end());
        for (auto& i : m) {
            if (i > index) i -= 1;
        }
    }
}

void Lcs::enforce_population_limit(std::vector<int>* protect) {
    while (total_numerosity() > pop_max_) {
        // Rules that never matched anything since creation go first.
        int stale = -1;
        for (size_t i = 0; i < pop_.size(); ++i) {
            const Classifier& cl = pop_[i];
            if (trial_ - cl.created_at >= params_.stale_trials &&
                cl.experience <= 1) {
                stale = static_cast<int>(i);
                break;
            }
        }
        if (stale >= 0) {
            remove_micro(stale, protect);
            continue;
        }

        const double mean_f = mean_fitness();
        std::vector<double> votes(pop_.size());
        for (size_t i = 0; i < pop_.size(); ++i) {
            votes[i] = deletion_vote(pop_[i], mean_f, params_.upd);
        }
        int victim;
        if (sys_err_ma_ < params_.upd.epsilon0) {
            // Minimal-size pressure: of two draws, the bulkier rule loses.
            const int a = roulette(votes, rng_);
            const int b = roulette(votes, rng_);
            victim = (pop_[static_cast<size_t>(b)].enabled_weights() >
                      pop_[static_cast<size_t>(a)].enabled_weights())
                         ? b
                         : a;
        } else {
            victim = roulette(votes, rng_);
        }
        remove_micro(victim, protect);
    }
}

void Lcs::save(std::ostream& os, uint64_t config_hash) const {
    BinaryWriter w(os);
    w.u32(kCheckpointMagic);
    w.u8(kCheckpointVersion);
    w.u64(config_hash);
    w.u64(trial_);
    w.i32(pop_max_);
    w.f64(sys_err_ma_);
    w.f64(mset_ma_);
    w.u32(static_cast<uint32_t>(pop_.size()));
    for (const auto& cl : pop_) serialize(cl, os);
}

Checkpoint read_checkpoint(std::istream& is) {
    BinaryReader r(is);
    if (r.u32() != kCheckpointMagic) throw FormatError("not a checkpoint file");
    if (r.u8() != kCheckpointVersion) throw FormatError("unsupported checkpoint version");
    Checkpoint ck;
    ck.config_hash = r.u64();
    ck.trial = r.u64();
    ck.pop_max = r.i32();
    ck.sys_err_ma = r.f64();
    ck.mset_ma = r.f64();
    const uint32_t n = r.u32();
    if (n > 1000000) throw FormatError("implausible classifier count");
    ck.classifiers.reserve(n);
    for (uint32_t i = 0; i < n; ++i) {
        ck.classifiers.push_back(deserialize_classifier(is));
    }
    return ck;
}

uint64_t Lcs::load(std::istream& is) {
    Checkpoint ck = read_checkpoint(is);
    trial_ = ck.trial;
    pop_max_ = ck.pop_max;
    sys_err_ma_ = ck.sys_err_ma;
    mset_ma_ = ck.mset_ma;
    pop_ = std::move(ck.classifiers);
    return ck.config_hash;
}

} // namespace dxcs
