#include "cmsc/perception.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace cmsc {

std::string DetectionSet::to_text() const {
    std::string out;
    char line[160];
    for (const Detection& d : dets) {
        std::snprintf(line, sizeof(line), "%.6f %.6f %.6f %.6f %.6f\n", d.score, d.box.cx,
                      d.box.cy, d.box.w, d.box.h);
        out += line;
    }
    return out;
}

FusionNet::FusionNet(std::string name, int channels) : channels_(channels) {
    kernels::ConvSpec spec;
    spec.kh = spec.kw = 3;
    spec.py = spec.px = 1;
    spec.cin = channels;
    spec.cout = channels;
    conv = Layer::conv2d(name + ".conv", spec);
    relu_ = Layer::relu();
}

Tensor FusionNet::forward(const Tensor& ego, const std::vector<const Tensor*>& collab,
                          Cache& cache, bool training) {
    for (const Tensor* t : collab)
        check(t->same_shape(ego), "fuse: collaborator map shape " + t->shape_str() +
                                      " does not match ego " + ego.shape_str());
    cache.valid = true;
    cache.n_sources = 1 + static_cast<int>(collab.size());
    cache.argmax.assign(ego.data.size(), 0);
    Tensor fused = ego;
    for (size_t s = 0; s < collab.size(); ++s) {
        const Tensor& m = *collab[s];
        for (size_t i = 0; i < fused.data.size(); ++i) {
            if (m.data[i] > fused.data[i]) {
                fused.data[i] = m.data[i];
                cache.argmax[i] = static_cast<int>(s) + 1;
            }
        }
    }
    Tensor z = conv.forward(fused, cache.c_conv, training);
    return relu_.forward(z, cache.c_relu, training);
}

std::vector<Tensor> FusionNet::backward(const Cache& cache, const Tensor& grad_out,
                                        GradStore* sink) const {
    check(cache.valid, "fuse: backward without cached forward activations");
    Tensor g = relu_.backward(cache.c_relu, grad_out, sink);
    Tensor gfused = conv.backward(cache.c_conv, g, sink);
    std::vector<Tensor> grads(static_cast<size_t>(cache.n_sources), Tensor(gfused.shape));
    for (size_t i = 0; i < gfused.data.size(); ++i)
        grads[static_cast<size_t>(cache.argmax[i])].data[i] = gfused.data[i];
    return grads;
}

DetectHead::DetectHead(std::string name, int channels) {
    kernels::ConvSpec spec;
    spec.cin = channels;
    spec.cout = 5;
    conv = Layer::conv2d(name + ".conv", spec);
}

Tensor DetectHead::forward(const Tensor& fused, LayerCache& cache, bool training) {
    return conv.forward(fused, cache, training);
}

Tensor DetectHead::backward(const LayerCache& cache, const Tensor& grad_out,
                            GradStore* sink) const {
    return conv.backward(cache, grad_out, sink);
}

void DetectHead::init_weights(Rng& rng) {
    conv.init_weights(rng);
    conv.params[1][0] = -2.0;  // objectness prior toward background
}

std::vector<Detection> nms(std::vector<Detection> dets, double iou_thr) {
    std::stable_sort(dets.begin(), dets.end(),
                     [](const Detection& a, const Detection& b) { return a.score > b.score; });
    std::vector<Detection> kept;
    for (const Detection& d : dets) {
        bool suppressed = false;
        for (const Detection& k : kept)
            if (iou(d.box, k.box) > iou_thr) {
                suppressed = true;
                break;
            }
        if (!suppressed) kept.push_back(d);
    }
    return kept;
}

DetectionSet decode_detections(const Tensor& grids, double score_thr, double nms_iou) {
    check(grids.ndim() == 3 && grids.dim(2) == 5,
          "decode_detections: expected HxWx5 grids, got " + grids.shape_str());
    const int H = grids.dim(0), W = grids.dim(1);
    std::vector<Detection> cand;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const double* cell = &grids.at(y, x, 0);
            const double score = 1.0 / (1.0 + std::exp(-cell[0]));
            if (score <= score_thr) continue;
            Detection d;
            d.score = score;
            d.box.cx = x + 0.5 + cell[1];
            d.box.cy = y + 0.5 + cell[2];
            d.box.w = std::exp(cell[3]);
            d.box.h = std::exp(cell[4]);
            cand.push_back(d);
        }
    DetectionSet out;
    out.dets = nms(std::move(cand), nms_iou);
    return out;
}

double average_precision(const DetectionSet& dets, const std::vector<Box>& gt, double iou_thr) {
    if (gt.empty()) return dets.dets.empty() ? 1.0 : 0.0;
    if (dets.dets.empty()) return 0.0;

    std::vector<Detection> sorted = dets.dets;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const Detection& a, const Detection& b) { return a.score > b.score; });

    std::vector<bool> matched(gt.size(), false);
    std::vector<int> tp(sorted.size(), 0);
    for (size_t i = 0; i < sorted.size(); ++i) {
        int best = -1;
        double best_iou = iou_thr;
        for (size_t j = 0; j < gt.size(); ++j) {
            if (matched[j]) continue;
            const double v = iou(sorted[i].box, gt[j]);
            if (v >= best_iou) {
                best_iou = v;
                best = static_cast<int>(j);
            }
        }
        if (best >= 0) {
            matched[static_cast<size_t>(best)] = true;
            tp[i] = 1;
        }
    }

    const size_t n = sorted.size();
    std::vector<double> precision(n), recall(n);
    int cum_tp = 0;
    for (size_t i = 0; i < n; ++i) {
        cum_tp += tp[i];
        precision[i] = static_cast<double>(cum_tp) / static_cast<double>(i + 1);
        recall[i] = static_cast<double>(cum_tp) / static_cast<double>(gt.size());
    }
    // All-point interpolation: integrate max-future precision over recall.
    double ap = 0.0, pmax = 0.0, prev_recall = 0.0;
    std::vector<double> pinterp(n);
    for (size_t i = n; i-- > 0;) {
        pmax = std::max(pmax, precision[i]);
        pinterp[i] = pmax;
    }
    for (size_t i = 0; i < n; ++i) {
        ap += (recall[i] - prev_recall) * pinterp[i];
        prev_recall = recall[i];
    }
    return ap;
}

}  // namespace cmsc
