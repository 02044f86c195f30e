#include "cmsc/pipeline.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cmsc {

const char* method_name(Method m) {
    switch (m) {
        case Method::Cmsc: return "cmsc";
        case Method::BaselineJscc: return "baseline_jscc";
        case Method::Baseline16Qam: return "baseline_16qam";
        case Method::Baseline256Qam: return "baseline_256qam";
        case Method::UpperBound: return "upper_bound";
    }
    return "?";
}

Method method_from_name(const std::string& s) {
    if (s == "cmsc") return Method::Cmsc;
    if (s == "baseline_jscc") return Method::BaselineJscc;
    if (s == "baseline_16qam") return Method::Baseline16Qam;
    if (s == "baseline_256qam") return Method::Baseline256Qam;
    if (s == "upper_bound") return Method::UpperBound;
    contract_fail("unknown method: " + s);
}

double parity_lambda(double lambda, double code_rate, int order) {
    int bits = 0;
    while ((1 << bits) < order) ++bits;
    return lambda * code_rate * bits / 8.0;
}

// `lambda` is the method's own compression ratio as reported in its row
// (the sweeps already apply the parity rule to the baselines).
double method_channel_uses(Method m, int grid_h, int grid_w, int channels, double lambda) {
    const double total = static_cast<double>(grid_h) * grid_w * channels;
    switch (m) {
        case Method::UpperBound:
            return total;  // complete feature maps, no selection or compression
        case Method::Baseline16Qam:
            return channel_uses(total, lambda, 0.5, 16);
        case Method::Baseline256Qam:
            return channel_uses(total, lambda, 0.5, 256);
        case Method::Cmsc:
        case Method::BaselineJscc:
            return total * lambda;  // K x C complex symbols
    }
    return 0.0;
}

namespace {

Modality coin(uint64_t h) { return (h & 1) ? Modality::Camera : Modality::Lidar; }

}  // namespace

SceneScore evaluate_scene(CmscModels& models, const PipelineConfig& pc, const EvalPoint& pt,
                          uint64_t seed, int scene_index) {
    const uint64_t scene_seed = hash_combine(seed, 0x5cee4ull, scene_index);
    const Scene scene = sample_scene(scene_seed, pc.scene);

    const Modality ego =
        pt.ego_random ? coin(hash_combine(seed, 0xe60ull, scene_index)) : pt.ego;

    FeatureMap m_ego = render_features(scene, ego, hash_combine(scene_seed, 0x0b5ull, 0),
                                       pc.render);

    std::vector<Tensor> aligned(static_cast<size_t>(pc.num_cavs));
    for (int i = 0; i < pc.num_cavs; ++i) {
        const Modality mi = pt.cavs.empty()
                                ? coin(hash_combine(seed, 0xca7ull, scene_index, i))
                                : pt.cavs[static_cast<size_t>(i) % pt.cavs.size()];
        FeatureMap m_i =
            render_features(scene, mi, hash_combine(scene_seed, 0x0b5ull, i + 1), pc.render);
        m_i.vehicle_id = i + 1;
        FeatureMap s_i = models.converters.to_standard(m_i);

        FeatureMap s_hat;
        if (pt.method == Method::UpperBound) {
            s_hat = s_i;  // ideal lossless delivery of the complete map
        } else {
            SelectorHead::Cache c_sel;
            ImportanceMap imp = models.selector.forward(s_i, c_sel, false);
            SelectResult sel = select(s_i, imp, pt.lambda);
            // Method-independent seed: all methods face the same channel
            // draws at a sweep point (paired comparisons across methods).
            const uint64_t chan_seed = hash_combine(seed, 0xc4a2ull, scene_index, i);
            if (pt.method == Method::Cmsc || pt.method == Method::BaselineJscc) {
                JsccEncoder::Cache c_enc;
                JsccDecoder::Cache c_dec;
                SymbolBlock block = models.encoder.forward(sel.pack.features, c_enc, false);
                TransmitResult tr = transmit(block, pt.channel, pt.snr_db, chan_seed);
                EqualizeResult eq = equalize(tr.received, tr.realization);
                Tensor decoded = models.decoder.forward(eq.symbols, c_dec, false);
                s_hat = scatter(sel.pack, decoded, Modality::Standard);
            } else {
                const int order = pt.method == Method::Baseline16Qam ? 16 : 256;
                ClassicTxResult tx = classic_transmit_chain(sel.pack, order);
                TransmitResult tr = transmit(tx.block, pt.channel, pt.snr_db, chan_seed);
                Tensor decoded = classic_receive_chain(tr.received, tr.realization, tx.framing,
                                                       tx.payload_bits, order);
                s_hat = scatter(sel.pack, decoded, Modality::Standard);
            }
        }
        aligned[static_cast<size_t>(i)] = models.converters.from_standard(s_hat, ego).tensor;
    }

    FusionNet::Cache c_fuse;
    LayerCache c_det;
    std::vector<const Tensor*> collab;
    for (const Tensor& t : aligned) collab.push_back(&t);
    Tensor fused = models.fusion(ego).forward(m_ego.tensor, collab, c_fuse, false);
    Tensor grids = models.detector(ego).forward(fused, c_det, false);
    DetectionSet dets = decode_detections(grids);

    SceneScore score;
    score.ap50 = average_precision(dets, scene.objects, 0.5);
    score.ap70 = average_precision(dets, scene.objects, 0.7);
    return score;
}

SceneScore evaluate_point(CmscModels& models, const PipelineConfig& pc, const EvalPoint& pt,
                          uint64_t seed, int scenes) {
    check(scenes > 0, "evaluate_point: scene count must be positive");
    const bool was_identity = models.converters.identity_mode;
    models.converters.identity_mode = (pt.method == Method::BaselineJscc);
    std::vector<SceneScore> per_scene(static_cast<size_t>(scenes));
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (int s = 0; s < scenes; ++s)
        per_scene[static_cast<size_t>(s)] = evaluate_scene(models, pc, pt, seed, s);
    models.converters.identity_mode = was_identity;
    SceneScore mean;
    for (const SceneScore& sc : per_scene) {
        mean.ap50 += sc.ap50;
        mean.ap70 += sc.ap70;
    }
    mean.ap50 /= scenes;
    mean.ap70 /= scenes;
    return mean;
}

}  // namespace cmsc
