#pragma once

#include <map>
#include <string>
#include <vector>

#include "cmsc/experiment.hpp"
#include "cmsc/trainer.hpp"

namespace cmsc {

// Plain-text key = value configuration ('#' starts a comment). Unknown keys
// are rejected so typos fail loudly.
class Config {
public:
    static Config from_file(const std::string& path);
    static Config from_string(const std::string& text);

    bool has(const std::string& key) const { return kv_.count(key) > 0; }
    std::string get_string(const std::string& key, const std::string& dflt) const;
    double get_double(const std::string& key, double dflt) const;
    int get_int(const std::string& key, int dflt) const;
    uint64_t get_u64(const std::string& key, uint64_t dflt) const;
    std::vector<double> get_list(const std::string& key, const std::vector<double>& dflt) const;

    const std::map<std::string, std::string>& items() const { return kv_; }

private:
    std::map<std::string, std::string> kv_;
};

// Builders from the documented key set; unrecognized keys are an error.
TrainConfig train_config_from(const Config& cfg);
ExperimentConfig experiment_config_from(const Config& cfg);

}  // namespace cmsc
