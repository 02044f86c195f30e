#pragma once

#include "cmsc/converter.hpp"
#include "cmsc/jscc.hpp"
#include "cmsc/perception.hpp"
#include "cmsc/selector.hpp"

namespace cmsc {

// All trainable networks of the pipeline plus their parameter registry.
// Fusion and detection are per-ego-modality (the paper's Gamma_xi_{m_e} and
// Gamma_delta_{m_e}); the lidar head doubles as the standard-space head.
class CmscModels {
public:
    CmscModels() = default;
    explicit CmscModels(int channels);

    int channels = 0;

    Converters converters;
    SelectorHead selector;
    JsccEncoder encoder;
    JsccDecoder decoder;
    FusionNet fusion_lidar, fusion_camera;
    DetectHead detect_lidar, detect_camera;

    ParamStore store;

    FusionNet& fusion(Modality ego);
    DetectHead& detector(Modality ego);

    void init_weights(uint64_t seed);

    void save(const std::string& path) const;
    void load(const std::string& path);

    // Stage freeze plans.
    void freeze_for_bootstrap();  // fusion + detection trainable
    void freeze_for_stage1();     // converters trainable
    void freeze_for_stage2();     // selector + codec trainable
    void unfreeze_all();

    bool converters_frozen() const;
};

}  // namespace cmsc
