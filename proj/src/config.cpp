#include "cmsc/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace cmsc {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    size_t b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

const std::set<std::string> kKnownKeys = {
    // geometry / renderer
    "grid_h", "grid_w", "channels", "min_objects", "max_objects", "min_size", "max_size",
    "lidar_noise_std", "camera_noise_std", "mixing_seed", "visibility_prob", "camera_amp_power",
    // training
    "eta", "alpha", "beta", "gamma", "mu", "lr_bootstrap", "lr_stage1", "lr_stage2", "lr_stage3",
    "steps_bootstrap", "steps_stage1", "steps_stage2", "steps_stage3", "batch_size", "seed",
    "train_snr_lo", "train_snr_hi", "lambda", "num_cavs", "train_lambda_lo", "train_lambda_hi",
    "train_lambda_full_prob",
    // experiments
    "methods", "channel", "snrs", "lambdas", "lambda_snrs", "ego_modality", "cav_modalities",
    "scenes",
};

}  // namespace

Config Config::from_string(const std::string& text) {
    Config cfg;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        check(eq != std::string::npos,
              "config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        check(kKnownKeys.count(key) > 0, "config: unknown key '" + key + "'");
        cfg.kv_[key] = val;
    }
    return cfg;
}

Config Config::from_file(const std::string& path) {
    std::ifstream f(path);
    check(f.good(), "config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return from_string(ss.str());
}

std::string Config::get_string(const std::string& key, const std::string& dflt) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? dflt : it->second;
}

double Config::get_double(const std::string& key, double dflt) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    try {
        return std::stod(it->second);
    } catch (...) {
        contract_fail("config: key '" + key + "' is not a number: " + it->second);
    }
}

int Config::get_int(const std::string& key, int dflt) const {
    return static_cast<int>(get_double(key, dflt));
}

uint64_t Config::get_u64(const std::string& key, uint64_t dflt) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    try {
        return std::stoull(it->second);
    } catch (...) {
        contract_fail("config: key '" + key + "' is not an unsigned integer: " + it->second);
    }
}

std::vector<double> Config::get_list(const std::string& key,
                                     const std::vector<double>& dflt) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    std::vector<double> out;
    std::string item;
    std::istringstream is(it->second);
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        try {
            out.push_back(std::stod(item));
        } catch (...) {
            contract_fail("config: key '" + key + "' has a non-numeric item: " + item);
        }
    }
    check(!out.empty(), "config: key '" + key + "' is an empty list");
    return out;
}

namespace {

void fill_shared(const Config& c, SceneConfig& scene, RenderConfig& render) {
    render.grid_h = scene.grid_h = c.get_int("grid_h", 32);
    render.grid_w = scene.grid_w = c.get_int("grid_w", 32);
    render.channels = c.get_int("channels", 16);
    scene.min_objects = c.get_int("min_objects", 2);
    scene.max_objects = c.get_int("max_objects", 6);
    scene.min_size = c.get_double("min_size", 3.0);
    scene.max_size = c.get_double("max_size", 6.0);
    render.lidar_noise_std = c.get_double("lidar_noise_std", 0.02);
    render.camera_noise_std = c.get_double("camera_noise_std", 0.08);
    render.mixing_seed = c.get_u64("mixing_seed", 7);
    render.visibility_prob = c.get_double("visibility_prob", 0.5);
    render.camera_amp_power = c.get_double("camera_amp_power", 0.5);
}

}  // namespace

TrainConfig train_config_from(const Config& c) {
    TrainConfig t;
    t.eta = c.get_double("eta", t.eta);
    t.alpha = c.get_double("alpha", t.alpha);
    t.beta = c.get_double("beta", t.beta);
    t.gamma = c.get_double("gamma", t.gamma);
    t.mu = c.get_double("mu", t.mu);
    t.lr_bootstrap = c.get_double("lr_bootstrap", t.lr_bootstrap);
    t.lr_stage1 = c.get_double("lr_stage1", t.lr_stage1);
    t.lr_stage2 = c.get_double("lr_stage2", t.lr_stage2);
    t.lr_stage3 = c.get_double("lr_stage3", t.lr_stage3);
    t.steps_bootstrap = c.get_int("steps_bootstrap", t.steps_bootstrap);
    t.steps_stage1 = c.get_int("steps_stage1", t.steps_stage1);
    t.steps_stage2 = c.get_int("steps_stage2", t.steps_stage2);
    t.steps_stage3 = c.get_int("steps_stage3", t.steps_stage3);
    t.batch_size = c.get_int("batch_size", t.batch_size);
    t.seed = c.get_u64("seed", t.seed);
    t.train_snr_lo = c.get_double("train_snr_lo", t.train_snr_lo);
    t.train_snr_hi = c.get_double("train_snr_hi", t.train_snr_hi);
    t.lambda = c.get_double("lambda", t.lambda);
    t.train_lambda_lo = c.get_double("train_lambda_lo", t.train_lambda_lo);
    t.train_lambda_hi = c.get_double("train_lambda_hi", t.train_lambda_hi);
    t.train_lambda_full_prob = c.get_double("train_lambda_full_prob", t.train_lambda_full_prob);
    t.num_cavs = c.get_int("num_cavs", t.num_cavs);
    fill_shared(c, t.scene, t.render);
    t.validate();
    return t;
}

ExperimentConfig experiment_config_from(const Config& c) {
    ExperimentConfig e;
    if (c.has("methods")) {
        e.methods.clear();
        std::istringstream is(c.get_string("methods", ""));
        std::string item;
        while (std::getline(is, item, ',')) {
            item.erase(0, item.find_first_not_of(" \t"));
            item.erase(item.find_last_not_of(" \t") + 1);
            if (!item.empty()) e.methods.push_back(method_from_name(item));
        }
        check(!e.methods.empty(), "config: methods list is empty");
    }
    e.channel = channel_model_from_name(c.get_string("channel", "awgn"));
    e.snrs = c.get_list("snrs", e.snrs);
    e.lambda = c.get_double("lambda", e.lambda);
    e.lambdas = c.get_list("lambdas", e.lambdas);
    e.lambda_snrs = c.get_list("lambda_snrs", e.lambda_snrs);
    e.ego_modality = c.get_string("ego_modality", e.ego_modality);
    e.cav_modalities = c.get_string("cav_modalities", e.cav_modalities);
    e.num_cavs = c.get_int("num_cavs", e.num_cavs);
    e.scenes = c.get_int("scenes", e.scenes);
    e.seed = c.get_u64("seed", e.seed);
    fill_shared(c, e.scene, e.render);
    return e;
}

}  // namespace cmsc
