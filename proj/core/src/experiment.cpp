#include "dxcs/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>

#include "dxcs/errors.hpp"

namespace dxcs {

namespace fs = std::filesystem;

void ExperimentData::finalize() {
    all_test_.resize(test.size());
    std::iota(all_test_.begin(), all_test_.end(), 0);
}

namespace {

std::string resolve(const std::string& path, const std::string& data_dir) {
    if (path.empty() || data_dir.empty() || fs::path(path).is_absolute()) {
        return path;
    }
    return (fs::path(data_dir) / path).string();
}

void save_checkpoint(const Lcs& lcs, uint64_t config_hash, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write checkpoint " + path);
    lcs.save(os, config_hash);
}

} // namespace

ExperimentData load_experiment_data(const ExperimentConfig& cfg,
                                    const std::string& data_dir) {
    ExperimentData data;
    if (cfg.dataset == "idx") {
        data.train = load_idx(resolve(cfg.train_images, data_dir),
                              resolve(cfg.train_labels, data_dir));
        if (!cfg.test_images.empty()) {
            data.test = load_idx(resolve(cfg.test_images, data_dir),
                                 resolve(cfg.test_labels, data_dir));
        }
    } else if (cfg.dataset == "csv") {
        CsvSchema schema;
        schema.has_header = cfg.csv_header;
        schema.label_column = cfg.csv_label_column;
        schema.image_side = cfg.csv_image_side;
        data.train = load_csv(resolve(cfg.csv_path, data_dir), schema);
    } else {
        data.train = load_cache(resolve(cfg.cache_train, data_dir));
        if (!cfg.cache_test.empty()) {
            data.test = load_cache(resolve(cfg.cache_test, data_dir));
        }
    }
    const SplitKind kind = cfg.split == "holdout" ? SplitKind::ShuffledHoldout
                                                  : SplitKind::TrainValidation;
    data.plan = make_splits(data.train, kind, cfg.split_seed);
    if (data.test.size() && data.test.shape != data.train.shape) {
        throw DataError("train and test sets have different shapes");
    }
    data.finalize();
    return data;
}

ArchSpec make_cond_spec(const ExperimentConfig&, const Dataset& ds) {
    return condition_arch(ds.shape.flat());
}

ArchSpec make_pred_spec(const ExperimentConfig& cfg, const Dataset& ds) {
    if (cfg.arch == "conv") {
        if (ds.shape.h < 2 || ds.shape.w < 2) {
            throw ConfigError("conv architecture needs image-shaped inputs");
        }
        return prediction_conv_arch(ds.shape, cfg.h_init, ds.n_classes);
    }
    return prediction_fc_arch(ds.shape.flat(), cfg.h_init, ds.n_classes);
}

ScorePass score_set(const Lcs& lcs, const Dataset& ds,
                    std::span<const size_t> indices) {
    ScorePass pass;
    const auto& pop = lcs.population();
    pass.match_counts.assign(pop.size(), 0);
    const bool ea_control = lcs.params().ea_control;
    size_t errors = 0;
    std::vector<int> mset;
    std::vector<double> y;
    for (size_t idx : indices) {
        const auto x = ds.instance(idx);
        mset.clear();
        if (ea_control) {
            for (size_t i = 0; i < pop.size(); ++i) {
                mset.push_back(static_cast<int>(i));
                ++pass.match_counts[i];
            }
        } else {
            for (size_t i = 0; i < pop.size(); ++i) {
                if (matches(pop[i], x)) {
                    mset.push_back(static_cast<int>(i));
                    ++pass.match_counts[i];
                }
            }
        }
        ++pass.scored;
        if (mset.empty()) {
            ++pass.uncovered;
            ++errors;
            continue;
        }
        const auto p = lcs.system_prediction(mset, x);
        one_hot(ds.labels[idx], ds.n_classes, y);
        errors += static_cast<size_t>(classifier_loss(p, y));
    }
    pass.error = pass.scored ? static_cast<double>(errors) / pass.scored : 0.0;
    return pass;
}

BestRule best_rule(const Lcs& lcs, const ScorePass& pass) {
    const auto& pop = lcs.population();
    BestRule best;
    if (pop.empty() || pass.scored == 0) return best;
    const double eps0 = lcs.params().upd.epsilon0;

    bool any_accurate = false;
    for (const auto& cl : pop) {
        if (cl.error < eps0) {
            any_accurate = true;
            break;
        }
    }
    for (size_t i = 0; i < pop.size(); ++i) {
        if (any_accurate && pop[i].error >= eps0) continue;
        if (best.index < 0) {
            best.index = static_cast<int>(i);
            continue;
        }
        const auto& cur = pop[static_cast<size_t>(best.index)];
        if (any_accurate) {
            if (pass.match_counts[i] > pass.match_counts[static_cast<size_t>(best.index)]) {
                best.index = static_cast<int>(i);
            }
        } else if (pop[i].error < cur.error ||
                   (pop[i].error == cur.error &&
                    pass.match_counts[i] > pass.match_counts[static_cast<size_t>(best.index)])) {
            best.index = static_cast<int>(i);
        }
    }
    best.match_fraction =
        static_cast<double>(pass.match_counts[static_cast<size_t>(best.index)]) /
        static_cast<double>(pass.scored);
    return best;
}

TestEval evaluate_test(const Lcs& lcs, const Dataset& ds,
                       std::span<const size_t> indices, std::ostream* dump) {
    TestEval ev;
    if (dump) *dump << "index,label,predicted,matched\n";
    size_t errors = 0;
    std::vector<double> p, y;
    for (size_t idx : indices) {
        ++ev.n;
        const bool matched = lcs.predict(ds.instance(idx), p);
        int predicted = -1;
        if (!matched) {
            ++ev.uncovered;
            ++errors;
        } else {
            predicted = argmax_lowest(p);
            if (predicted != ds.labels[idx]) ++errors;
        }
        if (dump) {
            *dump << idx << ',' << ds.labels[idx] << ',' << predicted << ','
                  << (matched ? 1 : 0) << '\n';
        }
    }
    ev.accuracy = ev.n ? 1.0 - static_cast<double>(errors) / ev.n : 0.0;
    return ev;
}

namespace {

struct LayerStat {
    double units = 0.0;
    double eta = 0.0;
    double enabled = 0.0;
};

// Micro-weighted means of prediction-network layer statistics over [P].
std::vector<LayerStat> topology_stats(const std::vector<Classifier>& pop) {
    std::vector<LayerStat> stats;
    double total = 0.0;
    for (const auto& cl : pop) {
        if (cl.pred.layers.size() > stats.size()) stats.resize(cl.pred.layers.size());
        for (size_t li = 0; li < cl.pred.layers.size(); ++li) {
            const Layer& l = cl.pred.layers[li];
            stats[li].units += static_cast<double>(l.n_units) * cl.numerosity;
            stats[li].eta += l.eta * cl.numerosity;
            stats[li].enabled += static_cast<double>(l.enabled_weights()) * cl.numerosity;
        }
        total += cl.numerosity;
    }
    if (total > 0.0) {
        for (auto& s : stats) {
            s.units /= total;
            s.eta /= total;
            s.enabled /= total;
        }
    }
    return stats;
}

} // namespace

RunResult run_experiment(const ExperimentConfig& cfg, const ExperimentData& data,
                         std::ostream* log) {
    cfg.validate();
    if (data.plan.train.empty() || data.plan.validation.empty()) {
        throw DataError("empty training or validation split");
    }

    fs::create_directories(cfg.out_dir);
    const fs::path out(cfg.out_dir);

    {
        std::ofstream manifest(out / "manifest.txt");
        manifest << "# " << kVersionString << "\n"
                 << "# config_hash=" << cfg.hash() << "\n"
                 << cfg.to_text();
    }

    std::ofstream metrics(out / "metrics.csv");
    metrics.precision(10);
    metrics << "trial,train_err_ma,val_err,val_err_ma,pred_weights,best_mfrac,"
               "mset_ma,pop_limit,pop_macros,pop_micros,wall_s\n";
    metrics.flush();

    std::ofstream topology(out / "topology.csv");
    topology.precision(10);
    topology << "trial,layer,mean_units,mean_eta,mean_enabled_weights\n";

    Lcs lcs(cfg.lcs_params(), make_cond_spec(cfg, data.train),
            make_pred_spec(cfg, data.train), cfg.seed);
    lcs.init_population();

    // Data-order stream is independent of the learner's stream.
    Rng order_rng(cfg.seed ^ UINT64_C(0x9E3779B97F4A7C15));

    std::vector<size_t> epoch_order;
    size_t epoch_cursor = 0;
    auto next_train_index = [&]() -> size_t {
        if (cfg.train_order == "epoch") {
            if (epoch_cursor >= epoch_order.size()) {
                epoch_order = data.plan.train;
                std::shuffle(epoch_order.begin(), epoch_order.end(), order_rng.engine());
                epoch_cursor = 0;
            }
            return epoch_order[epoch_cursor++];
        }
        return data.plan.train[static_cast<size_t>(order_rng.uniform_int(
            0, static_cast<int>(data.plan.train.size()) - 1))];
    };

    RunResult result;
    result.best_checkpoint = (out / "best.ckpt").string();
    result.final_checkpoint = (out / "final.ckpt").string();
    result.metrics_path = (out / "metrics.csv").string();
    result.best_val_ma = std::numeric_limits<double>::infinity();

    std::deque<double> val_window;
    std::vector<double> y;
    const auto t0 = std::chrono::steady_clock::now();
    const uint64_t iterations = cfg.trials / cfg.validate_every;

    for (uint64_t it = 0; it < iterations; ++it) {
        for (uint64_t t = 0; t < cfg.validate_every; ++t) {
            const size_t idx = next_train_index();
            one_hot(data.train.labels[idx], data.train.n_classes, y);
            lcs.run_trial(data.train.instance(idx), y);
        }

        std::vector<size_t> val_idx;
        if (cfg.val_sample == 0 || cfg.val_sample >= data.plan.validation.size()) {
            val_idx = data.plan.validation;
        } else {
            val_idx = sample_without_replacement(data.plan.validation,
                                                 cfg.val_sample, order_rng);
        }
        const ScorePass pass = score_set(lcs, data.train, val_idx);
        val_window.push_back(pass.error);
        while (static_cast<int>(val_window.size()) > cfg.val_ma_window) {
            val_window.pop_front();
        }
        const double val_ma =
            std::accumulate(val_window.begin(), val_window.end(), 0.0) /
            static_cast<double>(val_window.size());

        if (val_ma < result.best_val_ma) {
            result.best_val_ma = val_ma;
            result.best_trial = lcs.trial();
            save_checkpoint(lcs, cfg.hash(), result.best_checkpoint);
        }
        result.final_val_error = pass.error;

        const BestRule br = best_rule(lcs, pass);
        double pw = 0.0;
        int micros = 0;
        for (const auto& cl : lcs.population()) {
            pw += static_cast<double>(cl.pred.enabled_weights()) * cl.numerosity;
            micros += cl.numerosity;
        }
        const double wall =
            cfg.record_timing
                ? std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                      .count()
                : 0.0;
        metrics << lcs.trial() << ',' << lcs.system_error_ma() << ',' << pass.error
                << ',' << val_ma << ',' << pw << ',' << br.match_fraction << ','
                << lcs.match_set_ma() << ',' << lcs.pop_limit() << ','
                << lcs.population().size() << ',' << micros << ',' << wall << '\n';
        metrics.flush();

        const auto stats = topology_stats(lcs.population());
        for (size_t li = 0; li < stats.size(); ++li) {
            topology << lcs.trial() << ',' << li << ',' << stats[li].units << ','
                     << stats[li].eta << ',' << stats[li].enabled << '\n';
        }
        topology.flush();

        if (log) {
            *log << "trial " << lcs.trial() << " val_err " << pass.error
                 << " val_ma " << val_ma << " mfrac " << br.match_fraction
                 << '\n';
        }
    }

    // leftover trials (trials not divisible by validate_every) still learn
    for (uint64_t t = iterations * cfg.validate_every; t < cfg.trials; ++t) {
        const size_t idx = next_train_index();
        one_hot(data.train.labels[idx], data.train.n_classes, y);
        lcs.run_trial(data.train.instance(idx), y);
    }

    save_checkpoint(lcs, cfg.hash(), result.final_checkpoint);
    if (!std::isfinite(result.best_val_ma)) {
        save_checkpoint(lcs, cfg.hash(), result.best_checkpoint);
    }
    return result;
}

} // namespace dxcs
