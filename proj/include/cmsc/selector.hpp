#pragma once

#include <cstdint>
#include <vector>

#include "cmsc/nn.hpp"
#include "cmsc/render.hpp"

namespace cmsc {

struct ImportanceMap {
    Tensor values;  // H x W, sigmoid outputs in (0,1)
};

// K rows of retained features plus their spatial positions. Indices are
// strictly increasing linear positions into the H x W grid.
struct SparseFeaturePack {
    Tensor features;           // K x C (gating multiplier already applied)
    std::vector<int> indices;  // strictly increasing, in [0, H*W)
    int grid_h = 0, grid_w = 0;
    double lambda = 0.0;

    int k() const { return static_cast<int>(indices.size()); }

    std::vector<uint8_t> to_bytes() const;
    static SparseFeaturePack from_bytes(const std::vector<uint8_t>& bytes);
};

// K = ceil(lambda * H * W)
int selection_count(double lambda, int grid_h, int grid_w);

// Retained cell indices for a given importance map: the K highest scores,
// ties broken by lowest linear index; result sorted ascending.
std::vector<int> top_k_indices(const Tensor& importance, int k);

struct SelectResult {
    FeatureMap masked;      // input x importance at retained cells, zero elsewhere
    SparseFeaturePack pack;
};

SelectResult select(const FeatureMap& map, const ImportanceMap& imp, double lambda);

// Remap decoded rows to the original spatial grid, zero off-support.
FeatureMap scatter(const SparseFeaturePack& pack, const Tensor& decoded, Modality modality);

// Importance head: 1x1 conv (C -> 1) + sigmoid over the spatial grid.
class SelectorHead {
public:
    SelectorHead() = default;
    SelectorHead(std::string name, int channels);

    struct Cache {
        bool valid = false;
        LayerCache c_conv, c_sig;
    };

    ImportanceMap forward(const FeatureMap& map, Cache& cache, bool training);
    // grad w.r.t. the input map given grad w.r.t. importance values (H x W).
    Tensor backward(const Cache& cache, const Tensor& grad_imp, GradStore* sink) const;

    void register_params(ParamStore& store) { store.register_layer(conv); }
    void init_weights(Rng& rng) { conv.init_weights(rng); }

    Layer conv;

private:
    Layer sig_;
};

}  // namespace cmsc
