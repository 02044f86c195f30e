#pragma once

#include "cmsc/blocks.hpp"
#include "cmsc/render.hpp"

namespace cmsc {

// One conversion direction: ConvNeXt block -> SE block -> 1x1 projection.
// Shape-preserving on H x W x C maps.
class ConverterNet {
public:
    ConverterNet() = default;
    ConverterNet(std::string name, int channels, int se_reduction = 4);

    struct Cache {
        bool valid = false;
        ConvNeXtBlock::Cache c_cnx;
        SEBlock::Cache c_se;
        LayerCache c_proj;
    };

    Tensor forward(const Tensor& x, Cache& cache, bool training);
    Tensor backward(const Cache& cache, const Tensor& grad_out, GradStore* sink) const;

    void register_params(ParamStore& store);
    void init_weights(Rng& rng);

    // Configure weights so the net is the exact identity map: zeroed ConvNeXt
    // projection, saturated SE gates, identity 1x1 conv.
    void set_identity_weights();

    ConvNeXtBlock cnx;
    SEBlock se;
    Layer proj;
};

struct ConverterPairNet {
    ConverterPairNet() = default;
    ConverterPairNet(const std::string& name, Modality m, int channels)
        : modality(m),
          to_std(name + ".to_std", channels),
          from_std(name + ".from_std", channels) {}

    Modality modality = Modality::Lidar;
    ConverterNet to_std, from_std;
};

// Both modality pairs plus the Baseline-JSCC identity mode (converters
// bypassed, tags still transition).
class Converters {
public:
    Converters() = default;
    Converters(int channels)
        : lidar("converter.lidar", Modality::Lidar, channels),
          camera("converter.camera", Modality::Camera, channels) {}

    bool identity_mode = false;

    ConverterPairNet& pair(Modality m);
    const ConverterPairNet& pair(Modality m) const;

    FeatureMap to_standard(const FeatureMap& map, ConverterNet::Cache* cache = nullptr,
                           bool training = false);
    FeatureMap from_standard(const FeatureMap& map, Modality target,
                             ConverterNet::Cache* cache = nullptr, bool training = false);
    FeatureMap cycle(const FeatureMap& map, bool training = false);

    void register_params(ParamStore& store);
    void init_weights(Rng& rng);

    ConverterPairNet lidar, camera;
};

}  // namespace cmsc
