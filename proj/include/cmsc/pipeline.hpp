#pragma once

#include "cmsc/classic_phy.hpp"
#include "cmsc/models.hpp"
#include "cmsc/trainer.hpp"

namespace cmsc {

enum class Method { Cmsc, BaselineJscc, Baseline16Qam, Baseline256Qam, UpperBound };

const char* method_name(Method m);
Method method_from_name(const std::string& s);

struct PipelineConfig {
    SceneConfig scene;
    RenderConfig render;
    int num_cavs = 2;
};

// One sweep point. Random modalities resolve per scene from the seed.
struct EvalPoint {
    Method method = Method::Cmsc;
    ChannelModel channel = ChannelModel::Awgn;
    double snr_db = 20.0;
    double lambda = 0.06;
    bool ego_random = false;
    Modality ego = Modality::Lidar;
    std::vector<Modality> cavs;  // empty = random per scene
};

struct SceneScore {
    double ap50 = 0.0, ap70 = 0.0;
};

// Full receive-side evaluation of one scene under the given method.
// Deterministic in (seed, scene_index); forward passes run in evaluation
// mode and are safe to call concurrently.
SceneScore evaluate_scene(CmscModels& models, const PipelineConfig& pc, const EvalPoint& pt,
                          uint64_t seed, int scene_index);

// Mean AP over `scenes` scenes (parallel across scenes, deterministic
// aggregation in scene order).
SceneScore evaluate_point(CmscModels& models, const PipelineConfig& pc, const EvalPoint& pt,
                          uint64_t seed, int scenes);

// Real-valued channel-use budget for a result row (Eq.-parity formula).
double method_channel_uses(Method m, int grid_h, int grid_w, int channels, double lambda);

// The lambda giving a classic baseline the same channel uses as CMSC at
// `lambda`: lambda * code_rate * log2(order) / 8.
double parity_lambda(double lambda, double code_rate, int order);

}  // namespace cmsc
