#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cmsc/channel.hpp"
#include "cmsc/losses.hpp"
#include "cmsc/models.hpp"

namespace cmsc {

struct TrainConfig {
    // Loss weights (eta scales regression; alpha/beta/gamma the stage-1
    // consistency terms; mu the stage-2 reconstruction term).
    double eta = 2.0, alpha = 1.0, beta = 1.0, gamma = 1.0, mu = 1.0;
    double lr_bootstrap = 1e-3, lr_stage1 = 1e-3, lr_stage2 = 1e-3, lr_stage3 = 1e-4;
    int steps_bootstrap = 1500, steps_stage1 = 2000, steps_stage2 = 2000, steps_stage3 = 1000;
    int batch_size = 4;
    uint64_t seed = 0;
    ChannelModel stage2_channel = ChannelModel::Rayleigh;
    double train_snr_lo = 0.0, train_snr_hi = 20.0;  // per-step SNR draw, stages 2-3
    double lambda = 0.06;
    // Stages 2-3 draw the compression ratio per step (log-uniform in
    // [train_lambda_lo, train_lambda_hi], occasionally the full map) so the
    // codec generalizes across the sweep range.
    double train_lambda_lo = 0.01, train_lambda_hi = 0.3;
    double train_lambda_full_prob = 0.15;
    int num_cavs = 2;
    SceneConfig scene;
    RenderConfig render;

    void validate() const;
};

// One prepared training scene: per-vehicle observations (vehicle 0 is the
// ego) and, for stage 1, the lidar anchors defining the standard space.
struct TrainScene {
    Scene scene;
    CellTargets targets;
    Modality ego = Modality::Lidar;
    std::vector<FeatureMap> obs;
    std::vector<FeatureMap> anchors;
};

std::vector<TrainScene> make_homogeneous_batch(const TrainConfig& cfg, Modality m, int stage_id,
                                               int step);
std::vector<TrainScene> make_heterogeneous_batch(const TrainConfig& cfg, int stage_id, int step);

// Detection-only pre-training of the per-modality fusion + head on clean
// homogeneous scenes (no converters, no channel).
LossReport bootstrap_step(CmscModels& models, const std::vector<TrainScene>& batch,
                          const TrainConfig& cfg, GradStore* grad_capture = nullptr);

// Stage 1 (homogeneous batches, converters trainable): perception loss plus
// the three consistency losses. Errors on a mixed-modality batch.
LossReport stage1_step(CmscModels& models, const std::vector<TrainScene>& batch,
                       const TrainConfig& cfg, GradStore* grad_capture = nullptr);

// Stage 2 (heterogeneous, converters frozen): selector + codec trained over
// the fading channel. Errors if the converters are not frozen.
LossReport stage2_step(CmscModels& models, const std::vector<TrainScene>& batch,
                       const TrainConfig& cfg, uint64_t step_seed,
                       GradStore* grad_capture = nullptr);

// Stage 3: stage-2 loss, every parameter trainable.
LossReport stage3_finetune(CmscModels& models, const std::vector<TrainScene>& batch,
                           const TrainConfig& cfg, uint64_t step_seed,
                           GradStore* grad_capture = nullptr);

struct TrainResult {
    double stage1_first_total[2] = {0, 0};  // per modality parity (lidar, camera)
    double stage1_last_total[2] = {0, 0};
    double stage2_first_feat_mse = 0, stage2_last_feat_mse = 0;
    double wall_seconds = 0;
};

using StepHook = std::function<void(const std::string& stage, int step, const LossReport&)>;

// Bootstrap + the three stages. Appends loss curves to loss_csv (if
// non-empty) and writes checkpoints at stage boundaries under ckpt_prefix.
TrainResult run_training(CmscModels& models, const TrainConfig& cfg,
                         const std::string& loss_csv = "", const std::string& ckpt_prefix = "",
                         const StepHook& hook = {});

}  // namespace cmsc
