#include "cmsc/trainer.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "cmsc/rng.hpp"

namespace cmsc {

namespace {

int modality_id(Modality m) { return m == Modality::Camera ? 1 : 0; }

Modality coin_modality(uint64_t h) { return (h & 1) ? Modality::Camera : Modality::Lidar; }

// Detection grids are H x W x 5: objectness logit + 4 regression dims.
void split_grids(const Tensor& grids, Tensor& logits, Tensor& reg) {
    const int H = grids.dim(0), W = grids.dim(1);
    logits = Tensor({H, W});
    reg = Tensor({H, W, 4});
    for (long long i = 0; i < static_cast<long long>(H) * W; ++i) {
        logits.data[static_cast<size_t>(i)] = grids.data[static_cast<size_t>(i) * 5];
        for (int d = 0; d < 4; ++d)
            reg.data[static_cast<size_t>(i) * 4 + d] = grids.data[static_cast<size_t>(i) * 5 + 1 + d];
    }
}

Tensor merge_grid_grads(const Tensor& glogits, const Tensor& greg, double wcls, double wreg) {
    const int H = glogits.dim(0), W = glogits.dim(1);
    Tensor g({H, W, 5});
    for (long long i = 0; i < static_cast<long long>(H) * W; ++i) {
        g.data[static_cast<size_t>(i) * 5] = wcls * glogits.data[static_cast<size_t>(i)];
        for (int d = 0; d < 4; ++d)
            g.data[static_cast<size_t>(i) * 5 + 1 + d] =
                wreg * greg.data[static_cast<size_t>(i) * 4 + d];
    }
    return g;
}

struct DetectionLoss {
    LossGrad cls, reg;
};

DetectionLoss detection_loss(const Tensor& grids, const CellTargets& targets) {
    Tensor logits, reg;
    split_grids(grids, logits, reg);
    DetectionLoss out;
    out.cls = focal_cls_loss(logits, targets.objectness);
    out.reg = smooth_l1_reg_loss(reg, targets.regression, targets.objectness);
    return out;
}

// The observation seed is modality-independent so a vehicle's lidar anchor
// sees exactly the objects its own sensor sees.
FeatureMap render_vehicle(const Scene& scene, Modality m, uint64_t scene_seed, int vehicle,
                          const RenderConfig& rc) {
    FeatureMap fm = render_features(scene, m, hash_combine(scene_seed, 0x0b5ull, vehicle), rc);
    fm.vehicle_id = vehicle;
    return fm;
}

// Gradient pass-through of transmit + equalize: identity except where the
// equalizer declared an erasure (and the noise term, which is additive).
Tensor channel_backward(const Tensor& grad_eq, const ChannelRealization& real) {
    Tensor g = grad_eq;
    const long long n = g.numel() / 2;
    for (long long i = 0; i < n; ++i) {
        const double hr = real.gains.data[i * 2], hi = real.gains.data[i * 2 + 1];
        if (hr * hr + hi * hi < 1e-24) {
            g.data[i * 2] = 0.0;
            g.data[i * 2 + 1] = 0.0;
        }
    }
    return g;
}

}  // namespace

void TrainConfig::validate() const {
    check(eta >= 0 && alpha >= 0 && beta >= 0 && gamma >= 0 && mu >= 0,
          "TrainConfig: loss weights must be non-negative");
    check(stage2_channel == ChannelModel::Rayleigh,
          "TrainConfig: stage-2 transmissions are simulated over a Rayleigh fading channel");
    check(batch_size > 0 && num_cavs > 0, "TrainConfig: batch_size and num_cavs must be positive");
    check(lambda > 0 && lambda <= 1, "TrainConfig: lambda must be in (0, 1]");
}

std::vector<TrainScene> make_homogeneous_batch(const TrainConfig& cfg, Modality m, int stage_id,
                                               int step) {
    std::vector<TrainScene> batch(static_cast<size_t>(cfg.batch_size));
    const int vehicles = 1 + cfg.num_cavs;
    for (int b = 0; b < cfg.batch_size; ++b) {
        TrainScene& ts = batch[static_cast<size_t>(b)];
        const uint64_t scene_seed = hash_combine(cfg.seed, 0x7121ull, stage_id, step, b);
        ts.scene = sample_scene(scene_seed, cfg.scene);
        ts.targets = ground_truth_targets(ts.scene, cfg.render.grid_h, cfg.render.grid_w);
        ts.ego = m;
        for (int v = 0; v < vehicles; ++v) {
            const uint64_t obs_seed = hash_combine(scene_seed, 0x0b5ull, v);
            ts.obs.push_back(render_vehicle(ts.scene, m, scene_seed, v, cfg.render));
            // Anchor: the vehicle's lidar view of the same visible objects
            // with an independent noise draw, so the lidar converters learn
            // the scene mapping rather than the noise realization.
            FeatureMap anchor = render_observation(
                ts.scene, Modality::Lidar, obs_seed, hash_combine(obs_seed, 0xa2c402ull),
                cfg.render);
            anchor.vehicle_id = v;
            ts.anchors.push_back(std::move(anchor));
        }
    }
    return batch;
}

std::vector<TrainScene> make_heterogeneous_batch(const TrainConfig& cfg, int stage_id, int step) {
    std::vector<TrainScene> batch(static_cast<size_t>(cfg.batch_size));
    for (int b = 0; b < cfg.batch_size; ++b) {
        TrainScene& ts = batch[static_cast<size_t>(b)];
        const uint64_t scene_seed = hash_combine(cfg.seed, 0x7121ull, stage_id, step, b);
        ts.scene = sample_scene(scene_seed, cfg.scene);
        ts.targets = ground_truth_targets(ts.scene, cfg.render.grid_h, cfg.render.grid_w);
        ts.ego = coin_modality(hash_combine(scene_seed, 0xe60ull));
        ts.obs.push_back(render_vehicle(ts.scene, ts.ego, scene_seed, 0, cfg.render));
        for (int i = 0; i < cfg.num_cavs; ++i) {
            const Modality mi = coin_modality(hash_combine(scene_seed, 0xca7ull, i));
            ts.obs.push_back(render_vehicle(ts.scene, mi, scene_seed, i + 1, cfg.render));
        }
    }
    return batch;
}

namespace {

// The pre-trained perception surrogate must tolerate whatever statistics
// collaborator maps have after conversion, selection and reconstruction:
// jitter scale and offset, and sparsify to energy top-K, all seeded.
Tensor augment_collab_map(const Tensor& map, uint64_t seed) {
    Rng rng(hash_combine(seed, 0xa09ull));
    if (rng.uniform() < 0.3) return map;
    Tensor out = map;
    const double scale = rng.uniform(0.7, 1.4);
    const double offset = rng.uniform(-0.25, 0.25);
    for (double& v : out.data) v = v * scale + offset;
    if (rng.uniform() < 0.5) {
        const int C = out.dim(2);
        const int cells = out.dim(0) * out.dim(1);
        const double lambda = std::exp(rng.uniform(std::log(0.02), std::log(0.5)));
        const int keep = static_cast<int>(std::ceil(lambda * cells));
        Tensor energy({out.dim(0), out.dim(1)});
        for (int i = 0; i < cells; ++i) {
            double e = 0.0;
            for (int c = 0; c < C; ++c) {
                const double v = out.data[static_cast<size_t>(i) * C + c];
                e += v * v;
            }
            energy.data[static_cast<size_t>(i)] = e;
        }
        const std::vector<int> kept = top_k_indices(energy, keep);
        Tensor sparse(out.shape);
        for (int idx : kept)
            for (int c = 0; c < C; ++c)
                sparse.data[static_cast<size_t>(idx) * C + c] =
                    out.data[static_cast<size_t>(idx) * C + c];
        return sparse;
    }
    return out;
}

}  // namespace

LossReport bootstrap_step(CmscModels& models, const std::vector<TrainScene>& batch,
                          const TrainConfig& cfg, GradStore* grad_capture) {
    check(!batch.empty(), "bootstrap_step: empty batch");
    const int B = static_cast<int>(batch.size());
    const double inv_b = 1.0 / B;
    std::vector<GradStore> scene_grads(static_cast<size_t>(B));
    std::vector<double> cls(static_cast<size_t>(B)), reg(static_cast<size_t>(B));
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (int bi = 0; bi < B; ++bi) {
        const TrainScene& ts = batch[static_cast<size_t>(bi)];
        const Modality m = ts.ego;
        FusionNet& fusion = models.fusion(m);
        DetectHead& head = models.detector(m);
        FusionNet::Cache c_fuse;
        LayerCache c_det;
        std::vector<Tensor> aug;
        aug.reserve(ts.obs.size() - 1);
        for (size_t v = 1; v < ts.obs.size(); ++v)
            aug.push_back(augment_collab_map(ts.obs[v].tensor,
                                             hash_combine(ts.scene.seed, 0x6a1ull, v)));
        std::vector<const Tensor*> collab;
        for (const Tensor& t : aug) collab.push_back(&t);
        Tensor fused = fusion.forward(ts.obs[0].tensor, collab, c_fuse, true);
        Tensor grids = head.forward(fused, c_det, true);
        DetectionLoss dl = detection_loss(grids, ts.targets);
        cls[static_cast<size_t>(bi)] = dl.cls.value;
        reg[static_cast<size_t>(bi)] = dl.reg.value;

        Tensor g_grids = merge_grid_grads(dl.cls.grad, dl.reg.grad, inv_b, cfg.eta * inv_b);
        Tensor g_fused = head.backward(c_det, g_grids, &scene_grads[static_cast<size_t>(bi)]);
        fusion.backward(c_fuse, g_fused, &scene_grads[static_cast<size_t>(bi)]);
    }
    GradStore grads;
    double cls_acc = 0, reg_acc = 0;
    for (int bi = 0; bi < B; ++bi) {
        grads.merge(scene_grads[static_cast<size_t>(bi)]);
        cls_acc += cls[static_cast<size_t>(bi)];
        reg_acc += reg[static_cast<size_t>(bi)];
    }
    if (grad_capture) *grad_capture = grads;
    models.store.adam_step(grads, cfg.lr_bootstrap);
    LossReport report;
    report.add("cls", cls_acc * inv_b, 1.0);
    report.add("reg", reg_acc * inv_b, cfg.eta);
    return report;
}

LossReport stage1_step(CmscModels& models, const std::vector<TrainScene>& batch,
                       const TrainConfig& cfg, GradStore* grad_capture) {
    check(!batch.empty(), "stage1_step: empty batch");
    const Modality m = batch[0].ego;
    for (const TrainScene& ts : batch)
        for (const FeatureMap& fm : ts.obs)
            check(fm.modality == m, "stage1_step: mixed-modality batch (homogeneous scenes "
                                    "required for stage-1 converter training)");

    ConverterNet& to_std = models.converters.pair(m).to_std;
    ConverterNet& from_std = models.converters.pair(m).from_std;

    const int B = static_cast<int>(batch.size());
    const double inv_b = 1.0 / B;
    std::vector<GradStore> scene_grads(static_cast<size_t>(B));
    std::vector<std::array<double, 5>> scene_losses(static_cast<size_t>(B));

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (int bi = 0; bi < B; ++bi) {
        const TrainScene& ts = batch[static_cast<size_t>(bi)];
        GradStore& grads = scene_grads[static_cast<size_t>(bi)];
        double mstd_acc = 0, mback_acc = 0, mcyc_acc = 0;
        const int V = static_cast<int>(ts.obs.size());
        const double inv_v = 1.0 / V;
        std::vector<ConverterNet::Cache> c_to(V), c_back(V), c_cyc(V);
        std::vector<Tensor> converted(V);
        std::vector<LossGrad> l_std(V), l_back(V), l_cyc(V);
        for (int v = 0; v < V; ++v) {
            converted[v] = to_std.forward(ts.obs[v].tensor, c_to[v], true);
            Tensor back = from_std.forward(ts.anchors[v].tensor, c_back[v], true);
            Tensor cyc = from_std.forward(converted[v], c_cyc[v], true);
            l_std[v] = mse_loss(converted[v], ts.anchors[v].tensor);
            l_back[v] = mse_loss(back, ts.obs[v].tensor);
            l_cyc[v] = mse_loss(cyc, ts.obs[v].tensor);
            mstd_acc += l_std[v].value * inv_v;
            mback_acc += l_back[v].value * inv_v;
            mcyc_acc += l_cyc[v].value * inv_v;
        }
        // Converted maps from all vehicles fuse in the standard space and go
        // through the standard-space (lidar-anchored) perception stack.
        FusionNet::Cache c_fuse;
        LayerCache c_det;
        std::vector<const Tensor*> collab;
        for (int v = 1; v < V; ++v) collab.push_back(&converted[v]);
        Tensor fused = models.fusion_lidar.forward(converted[0], collab, c_fuse, true);
        Tensor grids = models.detect_lidar.forward(fused, c_det, true);
        DetectionLoss dl = detection_loss(grids, ts.targets);
        scene_losses[static_cast<size_t>(bi)] = {dl.cls.value, dl.reg.value, 0, 0, 0};

        // Backward. Perception stack is frozen; it only routes gradients.
        Tensor g_grids = merge_grid_grads(dl.cls.grad, dl.reg.grad, inv_b, cfg.eta * inv_b);
        Tensor g_fused = models.detect_lidar.backward(c_det, g_grids, nullptr);
        std::vector<Tensor> g_sources = models.fusion_lidar.backward(c_fuse, g_fused, nullptr);
        for (int v = 0; v < V; ++v) {
            Tensor g_conv = std::move(g_sources[static_cast<size_t>(v)]);
            // alpha MSE(M_s, M_{m->s})
            l_std[v].grad.scale_(cfg.alpha * inv_b * inv_v);
            g_conv.add_(l_std[v].grad);
            // gamma MSE(M_m, M_{m->s->m}) through the cycle
            l_cyc[v].grad.scale_(cfg.gamma * inv_b * inv_v);
            g_conv.add_(from_std.backward(c_cyc[v], l_cyc[v].grad, &grads));
            // beta MSE(M_m, M_{s->m})
            l_back[v].grad.scale_(cfg.beta * inv_b * inv_v);
            from_std.backward(c_back[v], l_back[v].grad, &grads);
            to_std.backward(c_to[v], g_conv, &grads);
        }
        scene_losses[static_cast<size_t>(bi)][2] = mstd_acc;
        scene_losses[static_cast<size_t>(bi)][3] = mback_acc;
        scene_losses[static_cast<size_t>(bi)][4] = mcyc_acc;
    }

    GradStore grads;
    std::array<double, 5> acc{};
    for (int bi = 0; bi < B; ++bi) {
        grads.merge(scene_grads[static_cast<size_t>(bi)]);
        for (int k = 0; k < 5; ++k) acc[static_cast<size_t>(k)] += scene_losses[static_cast<size_t>(bi)][static_cast<size_t>(k)];
    }
    if (grad_capture) *grad_capture = grads;
    models.store.adam_step(grads, cfg.lr_stage1);
    LossReport report;
    report.add("cls", acc[0] * inv_b, 1.0);
    report.add("reg", acc[1] * inv_b, cfg.eta);
    report.add("mse_std", acc[2] * inv_b, cfg.alpha);
    report.add("mse_back", acc[3] * inv_b, cfg.beta);
    report.add("mse_cyc", acc[4] * inv_b, cfg.gamma);
    return report;
}

namespace {

// Shared stage-2/3 step; end_to_end=true additionally trains converters,
// fusion and detection.
LossReport transmission_step(CmscModels& models, const std::vector<TrainScene>& batch,
                             const TrainConfig& cfg, uint64_t step_seed, bool end_to_end,
                             double lr, GradStore* grad_capture) {
    check(!batch.empty(), "transmission step: empty batch");
    if (!end_to_end)
        check(models.converters_frozen(),
              "stage2_step: the semantic converters must be frozen in stage 2");

    const int B = static_cast<int>(batch.size());
    const double inv_b = 1.0 / B;
    Rng snr_rng(hash_combine(step_seed, 0x54eull));
    const double snr_db = snr_rng.uniform(cfg.train_snr_lo, cfg.train_snr_hi);
    double lambda = cfg.lambda;
    if (cfg.train_lambda_hi > cfg.train_lambda_lo) {
        lambda = snr_rng.uniform() < cfg.train_lambda_full_prob
                     ? 1.0
                     : std::exp(snr_rng.uniform(std::log(cfg.train_lambda_lo),
                                                std::log(cfg.train_lambda_hi)));
    }

    std::vector<GradStore> scene_grads(static_cast<size_t>(B));
    std::vector<std::array<double, 3>> scene_losses(static_cast<size_t>(B));
    // Batch statistics of the codec BatchNorm layers, applied serially after
    // the parallel section (Layer*, recorded cache stats).
    std::vector<std::vector<std::pair<Layer*, Tensor>>> scene_bn(static_cast<size_t>(B));

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (int bi = 0; bi < B; ++bi) {
        const TrainScene& ts = batch[static_cast<size_t>(bi)];
        GradStore& grads = scene_grads[static_cast<size_t>(bi)];
        GradStore* psink = end_to_end ? &grads : nullptr;  // perception + converter sink
        double cls_acc = 0, reg_acc = 0, feat_acc = 0;
        const Modality ego = ts.ego;
        const int ncav = static_cast<int>(ts.obs.size()) - 1;
        FusionNet& fusion = models.fusion(ego);
        DetectHead& head = models.detector(ego);

        std::vector<ConverterNet::Cache> c_to(ncav), c_from(ncav);
        std::vector<SelectorHead::Cache> c_sel(ncav);
        std::vector<JsccEncoder::Cache> c_enc(ncav);
        std::vector<JsccDecoder::Cache> c_dec(ncav);
        std::vector<ChannelRealization> realzn(ncav);
        std::vector<SparseFeaturePack> packs(ncav);
        std::vector<Tensor> s_maps(ncav), decoded(ncav), aligned(ncav);
        std::vector<ImportanceMap> imps(ncav);
        std::vector<LossGrad> l_feat(ncav);

        for (int i = 0; i < ncav; ++i) {
            const FeatureMap& mi = ts.obs[static_cast<size_t>(i) + 1];
            FeatureMap s = models.converters.to_standard(mi, &c_to[i], true);
            s_maps[i] = s.tensor;
            imps[i] = models.selector.forward(s, c_sel[i], true);
            SelectResult sel = select(s, imps[i], lambda);
            packs[i] = std::move(sel.pack);
            SymbolBlock tx_block = models.encoder.forward(packs[i].features, c_enc[i], true);
            TransmitResult tr =
                transmit(tx_block, cfg.stage2_channel, snr_db,
                         hash_combine(step_seed, 0xc4ull, bi, i));
            realzn[i] = std::move(tr.realization);
            EqualizeResult eq = equalize(tr.received, realzn[i]);
            decoded[i] = models.decoder.forward(eq.symbols, c_dec[i], true);
            auto& bn = scene_bn[static_cast<size_t>(bi)];
            bn.emplace_back(&models.encoder.bn1, c_enc[i].b1.aux2);
            bn.emplace_back(&models.encoder.bn2, c_enc[i].b2.aux2);
            bn.emplace_back(&models.decoder.bn1, c_dec[i].b1.aux2);
            bn.emplace_back(&models.decoder.bn2, c_dec[i].b2.aux2);
            l_feat[i] = mse_loss(decoded[i], packs[i].features);
            feat_acc += l_feat[i].value;
            FeatureMap shat = scatter(packs[i], decoded[i], Modality::Standard);
            aligned[i] = models.converters.from_standard(shat, ego, &c_from[i], true).tensor;
        }

        FusionNet::Cache c_fuse;
        LayerCache c_det;
        std::vector<const Tensor*> collab;
        for (int i = 0; i < ncav; ++i) collab.push_back(&aligned[i]);
        Tensor fused = fusion.forward(ts.obs[0].tensor, collab, c_fuse, true);
        Tensor grids = head.forward(fused, c_det, true);
        DetectionLoss dl = detection_loss(grids, ts.targets);
        cls_acc += dl.cls.value;
        reg_acc += dl.reg.value;

        Tensor g_grids = merge_grid_grads(dl.cls.grad, dl.reg.grad, inv_b, cfg.eta * inv_b);
        Tensor g_fused = head.backward(c_det, g_grids, psink);
        std::vector<Tensor> g_sources = fusion.backward(c_fuse, g_fused, psink);

        const int C = models.channels;
        ConverterNet& from_std = models.converters.pair(ego).from_std;
        for (int i = 0; i < ncav; ++i) {
            ConverterNet& to_std =
                models.converters.pair(ts.obs[static_cast<size_t>(i) + 1].modality).to_std;
            Tensor g_shat = from_std.backward(c_from[i], g_sources[static_cast<size_t>(i) + 1],
                                              psink);
            // Scatter adjoint: gather the gradient rows on the support.
            const int K = packs[i].k();
            Tensor g_dec({K, C});
            for (int r = 0; r < K; ++r) {
                const int idx = packs[i].indices[static_cast<size_t>(r)];
                for (int c = 0; c < C; ++c)
                    g_dec.at(r, c) = g_shat.data[static_cast<size_t>(idx) * C + c];
            }
            // mu MSE(F_hat, F): gradient w.r.t. both arguments.
            Tensor g_feat = l_feat[i].grad;
            g_feat.scale_(cfg.mu * inv_b);
            g_dec.add_(g_feat);
            Tensor g_eq_iq = models.decoder.backward(c_dec[i], g_dec, &grads);
            Tensor g_tx_iq = channel_backward(g_eq_iq, realzn[i]);
            Tensor g_pack = models.encoder.backward(c_enc[i], g_tx_iq, &grads);
            g_feat.scale_(-1.0);  // d/dF of mu*MSE(F_hat, F)
            g_pack.add_(g_feat);

            // Hard gate: retained features were scaled by their importance,
            // which is the gradient path into the selector.
            Tensor g_imp({packs[i].grid_h, packs[i].grid_w});
            Tensor g_s(s_maps[i].shape);
            for (int r = 0; r < K; ++r) {
                const int idx = packs[i].indices[static_cast<size_t>(r)];
                const double gate = imps[i].values.data[static_cast<size_t>(idx)];
                double acc = 0.0;
                for (int c = 0; c < C; ++c) {
                    const double gp = g_pack.at(r, c);
                    acc += gp * s_maps[i].data[static_cast<size_t>(idx) * C + c];
                    if (end_to_end) g_s.data[static_cast<size_t>(idx) * C + c] += gp * gate;
                }
                g_imp.data[static_cast<size_t>(idx)] = acc;
            }
            Tensor g_s_sel = models.selector.backward(c_sel[i], g_imp, &grads);
            if (end_to_end) {
                g_s.add_(g_s_sel);
                to_std.backward(c_to[i], g_s, psink);
            }
        }
        scene_losses[static_cast<size_t>(bi)] = {cls_acc, reg_acc, feat_acc};
    }

    GradStore grads;
    std::array<double, 3> acc{};
    for (int bi = 0; bi < B; ++bi) {
        for (auto& [layer, stats] : scene_bn[static_cast<size_t>(bi)]) {
            LayerCache c;
            c.valid = true;
            c.training = true;
            c.aux2 = std::move(stats);
            layer->apply_deferred_updates(c);
        }
        grads.merge(scene_grads[static_cast<size_t>(bi)]);
        for (int k = 0; k < 3; ++k)
            acc[static_cast<size_t>(k)] += scene_losses[static_cast<size_t>(bi)][static_cast<size_t>(k)];
    }
    if (grad_capture) *grad_capture = grads;
    models.store.adam_step(grads, lr);
    LossReport report;
    report.add("cls", acc[0] * inv_b, 1.0);
    report.add("reg", acc[1] * inv_b, cfg.eta);
    report.add("mse_feat", acc[2] * inv_b, cfg.mu);  // summed over CAVs per scene
    return report;
}

}  // namespace

LossReport stage2_step(CmscModels& models, const std::vector<TrainScene>& batch,
                       const TrainConfig& cfg, uint64_t step_seed, GradStore* grad_capture) {
    return transmission_step(models, batch, cfg, step_seed, false, cfg.lr_stage2, grad_capture);
}

LossReport stage3_finetune(CmscModels& models, const std::vector<TrainScene>& batch,
                           const TrainConfig& cfg, uint64_t step_seed, GradStore* grad_capture) {
    return transmission_step(models, batch, cfg, step_seed, true, cfg.lr_stage3, grad_capture);
}

TrainResult run_training(CmscModels& models, const TrainConfig& cfg, const std::string& loss_csv,
                         const std::string& ckpt_prefix, const StepHook& hook) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    models.init_weights(cfg.seed);

    std::FILE* csv = nullptr;
    if (!loss_csv.empty()) {
        csv = std::fopen(loss_csv.c_str(), "w");
        check(csv != nullptr, "run_training: cannot open loss csv '" + loss_csv + "'");
        std::fprintf(csv, "stage,step,cls,reg,mse_std,mse_back,mse_cyc,mse_feat,total\n");
    }
    auto log = [&](const std::string& stage, int step, const LossReport& r) {
        if (csv) {
            auto comp = [&](const char* name) {
                for (size_t i = 0; i < r.names.size(); ++i)
                    if (r.names[i] == name) return r.components[i];
                return 0.0;
            };
            std::fprintf(csv, "%s,%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", stage.c_str(), step,
                         comp("cls"), comp("reg"), comp("mse_std"), comp("mse_back"),
                         comp("mse_cyc"), comp("mse_feat"), r.total);
        }
        if (hook) hook(stage, step, r);
    };
    auto save_stage = [&](const std::string& tag) {
        if (!ckpt_prefix.empty()) models.save(ckpt_prefix + "_" + tag + ".ckpt");
    };

    TrainResult res;

    models.freeze_for_bootstrap();
    for (int step = 0; step < cfg.steps_bootstrap; ++step) {
        const Modality m = step % 2 == 0 ? Modality::Lidar : Modality::Camera;
        auto batch = make_homogeneous_batch(cfg, m, 0, step);
        log("bootstrap", step, bootstrap_step(models, batch, cfg));
    }
    save_stage("bootstrap");

    models.freeze_for_stage1();
    for (int step = 0; step < cfg.steps_stage1; ++step) {
        const Modality m = step % 2 == 0 ? Modality::Lidar : Modality::Camera;
        auto batch = make_homogeneous_batch(cfg, m, 1, step);
        LossReport r = stage1_step(models, batch, cfg);
        if (step < 2) res.stage1_first_total[step % 2] = r.total;
        if (step >= cfg.steps_stage1 - 2) res.stage1_last_total[step % 2] = r.total;
        log("stage1", step, r);
    }
    save_stage("stage1");

    models.freeze_for_stage2();
    for (int step = 0; step < cfg.steps_stage2; ++step) {
        auto batch = make_heterogeneous_batch(cfg, 2, step);
        LossReport r =
            stage2_step(models, batch, cfg, hash_combine(cfg.seed, 0x57a9e2ull, 2, step));
        if (step == 0) res.stage2_first_feat_mse = r.component("mse_feat");
        if (step == cfg.steps_stage2 - 1) res.stage2_last_feat_mse = r.component("mse_feat");
        log("stage2", step, r);
    }
    save_stage("stage2");

    models.unfreeze_all();
    for (int step = 0; step < cfg.steps_stage3; ++step) {
        auto batch = make_heterogeneous_batch(cfg, 3, step);
        LossReport r =
            stage3_finetune(models, batch, cfg, hash_combine(cfg.seed, 0x57a9e2ull, 3, step));
        log("stage3", step, r);
    }
    save_stage("stage3");
    if (!ckpt_prefix.empty()) models.save(ckpt_prefix + "_final.ckpt");

    if (csv) std::fclose(csv);
    res.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

}  // namespace cmsc
