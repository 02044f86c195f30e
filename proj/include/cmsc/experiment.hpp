#pragma once

#include "cmsc/pipeline.hpp"

namespace cmsc {

struct ExperimentConfig {
    std::vector<Method> methods = {Method::Cmsc, Method::BaselineJscc, Method::Baseline16Qam,
                                   Method::Baseline256Qam, Method::UpperBound};
    ChannelModel channel = ChannelModel::Awgn;
    std::vector<double> snrs = {0, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20};
    double lambda = 0.06;
    std::vector<double> lambdas = {0.01, 0.02, 0.04, 0.06, 0.1, 0.2};
    std::vector<double> lambda_snrs = {0, 10, 20};
    std::string ego_modality = "lidar";      // lidar | camera | random
    std::string cav_modalities = "random";   // "random" or comma-separated names
    int num_cavs = 2;
    int scenes = 200;
    uint64_t seed = 0;
    SceneConfig scene;
    RenderConfig render;

    PipelineConfig pipeline() const;
    EvalPoint base_point(Method m) const;
};

struct ResultRow {
    std::string method;
    std::string channel;
    double snr_db = 0;
    double lambda = 0;
    std::string ego_modality;
    std::string cav_modalities;
    double ap50 = 0, ap70 = 0;
    double channel_uses = 0;
    uint64_t seed = 0;
    int scenes = 0;
};

// Table-I analog: (ego, CAV) over {lidar, camera}^2 at the configured SNR.
std::vector<ResultRow> run_sensor_matrix(CmscModels& models, const ExperimentConfig& cfg);

// Fig.-4 analog: method x SNR grid (baseline lambdas from channel-use parity).
std::vector<ResultRow> run_snr_sweep(CmscModels& models, const ExperimentConfig& cfg);

// Fig.-5 analog: CMSC over lambda x SNR on a Rayleigh channel.
std::vector<ResultRow> run_lambda_sweep(CmscModels& models, const ExperimentConfig& cfg);

void emit_csv(const std::vector<ResultRow>& rows, const std::string& path);
std::string rows_to_csv(const std::vector<ResultRow>& rows);

}  // namespace cmsc
