#pragma once

#include "cmsc/scene.hpp"

namespace cmsc {

struct FeatureMap {
    Tensor tensor;  // H x W x C
    Modality modality = Modality::Standard;
    int vehicle_id = -1;
};

struct RenderConfig {
    int grid_h = 32, grid_w = 32, channels = 16;
    // Blob geometry (cells). Lidar blobs are sharp; camera blobs carry an
    // extra smear component along the range direction from the observer.
    double lidar_sigma = 1.0;
    double camera_sigma_tan = 1.0;
    double camera_sigma_range = 3.0;
    double lidar_noise_std = 0.02;
    double camera_noise_std = 0.08;
    double ref_extent = 3.0;  // box size at which the blob sigma equals the nominal sigma
    // Smear attenuation exponent: 0 keeps blob peaks, 1 conserves blob
    // energy (weak smeared camera blobs).
    double camera_amp_power = 0.5;
    // Each vehicle independently observes this fraction of the objects
    // (field-of-view / occlusion stand-in); the subset is derived from the
    // observation seed and shared across that vehicle's modalities.
    double visibility_prob = 0.5;
    // Fixed seeded channel-mixing map (modality-specific).
    uint64_t mixing_seed = 7;
    double mixing_scale = 1.0;
    double bias_scale = 0.05;
};

// Noise-free full-visibility render: scene occupancy latents pushed through
// the fixed modality-specific linear mixing and tanh.
Tensor render_deterministic(const Scene& scene, Modality modality, const RenderConfig& cfg);

// One vehicle's observation: the visible-object subset and the additive
// noise both derive from obs_seed (the subset is modality-independent, the
// noise is not). Deterministic in (scene, modality, obs_seed).
FeatureMap render_features(const Scene& scene, Modality modality, uint64_t obs_seed,
                           const RenderConfig& cfg);

// Render with the visibility of vis_seed but an independent noise stream
// (the standard-space anchor of a lidar vehicle: same objects, fresh noise).
FeatureMap render_observation(const Scene& scene, Modality modality, uint64_t vis_seed,
                              uint64_t noise_seed, const RenderConfig& cfg);

void add_render_noise(Tensor& map, Modality modality, uint64_t obs_seed,
                      const RenderConfig& cfg);

std::vector<bool> visible_objects(size_t count, uint64_t obs_seed, const RenderConfig& cfg);

}  // namespace cmsc
