#pragma once

#include <vector>

#include "cmsc/nn.hpp"
#include "cmsc/render.hpp"
#include "cmsc/scene.hpp"

namespace cmsc {

struct Detection {
    Box box;
    double score = 0.0;
};

struct DetectionSet {
    std::vector<Detection> dets;
    // One line per box: score cx cy w h
    std::string to_text() const;
};

// Element-wise max over {ego} u collaborators, then 3x3 conv (C -> C) + ReLU.
// Permutation-invariant in the collaborators and idempotent under duplicates.
class FusionNet {
public:
    FusionNet() = default;
    FusionNet(std::string name, int channels);

    struct Cache {
        bool valid = false;
        int n_sources = 0;
        std::vector<int> argmax;  // winning source per element (0 = ego)
        LayerCache c_conv, c_relu;
    };

    Tensor forward(const Tensor& ego, const std::vector<const Tensor*>& collab, Cache& cache,
                   bool training);
    // Gradients for [ego, collab...] in order.
    std::vector<Tensor> backward(const Cache& cache, const Tensor& grad_out,
                                 GradStore* sink) const;

    void register_params(ParamStore& store) { store.register_layer(conv); }
    void init_weights(Rng& rng) { conv.init_weights(rng); }

    Layer conv;

private:
    int channels_ = 0;
    Layer relu_;
};

// 1x1 conv producing per-cell (objectness logit, dx, dy, log w, log h).
class DetectHead {
public:
    DetectHead() = default;
    DetectHead(std::string name, int channels);

    Tensor forward(const Tensor& fused, LayerCache& cache, bool training);
    Tensor backward(const LayerCache& cache, const Tensor& grad_out, GradStore* sink) const;

    void register_params(ParamStore& store) { store.register_layer(conv); }
    void init_weights(Rng& rng);

    Layer conv;
};

// Decode the raw grids into boxes: sigmoid(logit) > score_thr, boxes placed
// relative to cell centers, then greedy NMS.
DetectionSet decode_detections(const Tensor& grids, double score_thr = 0.1,
                               double nms_iou = 0.5);

std::vector<Detection> nms(std::vector<Detection> dets, double iou_thr);

// All-point interpolated AP with score-descending greedy matching. With no
// ground truth and no detections the task is vacuously solved: AP = 1.
double average_precision(const DetectionSet& dets, const std::vector<Box>& gt, double iou_thr);

}  // namespace cmsc
