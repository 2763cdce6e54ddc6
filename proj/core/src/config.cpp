#include "dxcs/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "dxcs/errors.hpp"

namespace dxcs {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "off" || v == "no") return false;
    throw ConfigError("expected a boolean, got '" + v + "'");
}

template <typename T>
T parse_num(const std::string& v) {
    std::istringstream ss(v);
    T out;
    ss >> out;
    if (ss.fail() || !trim(v.substr(static_cast<size_t>(ss.tellg()) == std::string::npos
                                        ? v.size()
                                        : static_cast<size_t>(ss.tellg())))
                          .empty()) {
        throw ConfigError("expected a number, got '" + v + "'");
    }
    return out;
}

std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}
std::string fmt(bool v) { return v ? "true" : "false"; }
std::string fmt(const std::string& v) { return v; }
std::string fmt(int v) { return std::to_string(v); }
std::string fmt(uint64_t v) { return std::to_string(v); }

} // namespace

void apply_config_kv(ExperimentConfig& c, const std::string& key,
                     const std::string& value) {
    const std::string v = trim(value);
    if (key == "dataset") c.dataset = v;
    else if (key == "train_images") c.train_images = v;
    else if (key == "train_labels") c.train_labels = v;
    else if (key == "test_images") c.test_images = v;
    else if (key == "test_labels") c.test_labels = v;
    else if (key == "csv_path") c.csv_path = v;
    else if (key == "csv_header") c.csv_header = parse_bool(v);
    else if (key == "csv_label_column") c.csv_label_column = parse_num<int>(v);
    else if (key == "csv_image_side") c.csv_image_side = parse_num<int>(v);
    else if (key == "cache_train") c.cache_train = v;
    else if (key == "cache_test") c.cache_test = v;
    else if (key == "split") c.split = v;
    else if (key == "split_seed") c.split_seed = parse_num<uint64_t>(v);
    else if (key == "arch") c.arch = v;
    else if (key == "h_init") c.h_init = parse_num<int>(v);
    else if (key == "pop_max") c.pop_max = parse_num<int>(v);
    else if (key == "adaptive_pop") c.adaptive_pop = parse_bool(v);
    else if (key == "mode") c.mode = v;
    else if (key == "epsilon0") c.epsilon0 = parse_num<double>(v);
    else if (key == "beta") c.beta = parse_num<double>(v);
    else if (key == "alpha") c.alpha = parse_num<double>(v);
    else if (key == "nu") c.nu = parse_num<double>(v);
    else if (key == "delta") c.delta = parse_num<double>(v);
    else if (key == "theta_del") c.theta_del = parse_num<uint64_t>(v);
    else if (key == "fit_init") c.fit_init = parse_num<double>(v);
    else if (key == "err_init") c.err_init = parse_num<double>(v);
    else if (key == "fit_reduction") c.fit_reduction = parse_num<double>(v);
    else if (key == "err_reduction") c.err_reduction = parse_num<double>(v);
    else if (key == "theta_ea") c.theta_ea = parse_num<double>(v);
    else if (key == "lambda") c.lambda = parse_num<int>(v);
    else if (key == "chi") c.chi = parse_num<double>(v);
    else if (key == "omega") c.omega = parse_num<double>(v);
    else if (key == "h_max") c.h_max = parse_num<int>(v);
    else if (key == "connection_mutation") c.connection_mutation = parse_bool(v);
    else if (key == "pop_init") c.pop_init = parse_bool(v);
    else if (key == "sigma_init") c.sigma_init = parse_num<double>(v);
    else if (key == "sigma_cover") c.sigma_cover = parse_num<double>(v);
    else if (key == "trials") c.trials = parse_num<uint64_t>(v);
    else if (key == "validate_every") c.validate_every = parse_num<uint64_t>(v);
    else if (key == "val_ma_window") c.val_ma_window = parse_num<int>(v);
    else if (key == "val_sample") c.val_sample = parse_num<uint64_t>(v);
    else if (key == "train_order") c.train_order = v;
    else if (key == "seed") c.seed = parse_num<uint64_t>(v);
    else if (key == "out_dir") c.out_dir = v;
    else if (key == "record_timing") c.record_timing = parse_bool(v);
    else throw ConfigError("unknown config key '" + key + "'");
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    ExperimentConfig cfg;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(lineno) +
                              ": expected key=value");
        }
        apply_config_kv(cfg, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return cfg;
}

void ExperimentConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError(msg); };
    if (dataset != "idx" && dataset != "csv" && dataset != "cache")
        fail("dataset must be idx, csv, or cache");
    if (split != "train-val" && split != "holdout")
        fail("split must be train-val or holdout");
    if (arch != "fc" && arch != "conv") fail("arch must be fc or conv");
    if (mode != "xcsf" && mode != "ea-control") fail("mode must be xcsf or ea-control");
    if (train_order != "random" && train_order != "epoch")
        fail("train_order must be random or epoch");
    if (h_init < 1) fail("h_init must be >= 1");
    if (pop_max < 1) fail("pop_max must be >= 1");
    if (beta < 0.0 || beta > 1.0) fail("beta must be in [0,1]");
    if (epsilon0 <= 0.0) fail("epsilon0 must be > 0");
    if (alpha <= 0.0 || alpha > 1.0) fail("alpha must be in (0,1]");
    if (nu < 1.0) fail("nu must be >= 1");
    if (delta < 0.0 || delta > 1.0) fail("delta must be in [0,1]");
    if (fit_init <= 0.0) fail("fit_init must be > 0");
    if (err_init < 0.0) fail("err_init must be >= 0");
    if (fit_reduction <= 0.0 || fit_reduction > 1.0) fail("fit_reduction in (0,1]");
    if (err_reduction < 0.0 || err_reduction > 1.0) fail("err_reduction in [0,1]");
    if (lambda < 2 || lambda % 2 != 0) fail("lambda must be even and >= 2");
    if (chi != 0.0) fail("crossover is not supported; chi must be 0");
    if (omega < 0.0 || omega > 1.0) fail("omega must be in [0,1]");
    if (h_max < 1) fail("h_max must be >= 1");
    if (sigma_init < 0.0 || sigma_cover < 0.0) fail("sigma must be >= 0");
    if (trials == 0) fail("trials must be > 0");
    if (validate_every == 0) fail("validate_every must be > 0");
    if (val_ma_window < 1) fail("val_ma_window must be >= 1");
    if (theta_ea < 0.0) fail("theta_ea must be >= 0");
    if (dataset == "idx" && (train_images.empty() || train_labels.empty()))
        fail("idx dataset needs train_images and train_labels");
    if (dataset == "csv" && csv_path.empty()) fail("csv dataset needs csv_path");
    if (dataset == "cache" && cache_train.empty()) fail("cache dataset needs cache_train");
    if (split == "train-val" && dataset == "idx" &&
        (test_images.empty() || test_labels.empty()))
        fail("train-val split needs test_images and test_labels");
}

std::string ExperimentConfig::to_text(bool include_output) const {
    std::ostringstream ss;
    auto kv = [&ss](const char* k, const auto& v) { ss << k << "=" << fmt(v) << "\n"; };
    kv("dataset", dataset);
    kv("train_images", train_images);
    kv("train_labels", train_labels);
    kv("test_images", test_images);
    kv("test_labels", test_labels);
    kv("csv_path", csv_path);
    kv("csv_header", csv_header);
    kv("csv_label_column", csv_label_column);
    kv("csv_image_side", csv_image_side);
    kv("cache_train", cache_train);
    kv("cache_test", cache_test);
    kv("split", split);
    kv("split_seed", split_seed);
    kv("arch", arch);
    kv("h_init", h_init);
    kv("pop_max", pop_max);
    kv("adaptive_pop", adaptive_pop);
    kv("mode", mode);
    kv("epsilon0", epsilon0);
    kv("beta", beta);
    kv("alpha", alpha);
    kv("nu", nu);
    kv("delta", delta);
    kv("theta_del", theta_del);
    kv("fit_init", fit_init);
    kv("err_init", err_init);
    kv("fit_reduction", fit_reduction);
    kv("err_reduction", err_reduction);
    kv("theta_ea", theta_ea);
    kv("lambda", lambda);
    kv("chi", chi);
    kv("omega", omega);
    kv("h_max", h_max);
    kv("connection_mutation", connection_mutation);
    kv("pop_init", pop_init);
    kv("sigma_init", sigma_init);
    kv("sigma_cover", sigma_cover);
    kv("trials", trials);
    kv("validate_every", validate_every);
    kv("val_ma_window", val_ma_window);
    kv("val_sample", val_sample);
    kv("train_order", train_order);
    kv("seed", seed);
    if (include_output) {
        kv("out_dir", out_dir);
        kv("record_timing", record_timing);
    }
    return ss.str();
}

// Output location and timing capture do not change what the run computes,
// so they stay out of the hash that ties checkpoints to a configuration.
uint64_t ExperimentConfig::hash() const {
    const std::string t = to_text(false);
    uint64_t h = UINT64_C(14695981039346656037);
    for (unsigned char ch : t) {
        h ^= ch;
        h *= UINT64_C(1099511628211);
    }
    return h;
}

LcsParams ExperimentConfig::lcs_params() const {
    LcsParams p;
    p.upd.beta = beta;
    p.upd.epsilon0 = epsilon0;
    p.upd.alpha = alpha;
    p.upd.nu = nu;
    p.upd.theta_del = theta_del;
    p.upd.delta = delta;
    p.upd.fit_init = fit_init;
    p.upd.err_init = err_init;
    p.evo.lambda = lambda;
    p.evo.theta_ea = theta_ea;
    p.evo.fit_reduction = fit_reduction;
    p.evo.err_reduction = err_reduction;
    p.evo.h_max = h_max;
    p.evo.connection_mutation = connection_mutation;
    p.pop_max = pop_max;
    p.adaptive_pop = adaptive_pop;
    p.ea_control = mode == "ea-control";
    p.pop_init = pop_init;
    p.omega = omega;
    p.sigma_init = sigma_init;
    p.sigma_cover = sigma_cover;
    return p;
}

} // namespace dxcs
