#include "cmsc/render.hpp"

#include <array>
#include <cmath>

#include "cmsc/rng.hpp"

namespace cmsc {

namespace {

// Non-negative occupancy latents (occupancy, blurred occupancy, edge
// magnitude, squared occupancy) mixed by non-negative weights: blob
// signatures are positive-going in every channel, so element-wise max
// fusion across vehicles keeps them intact.
constexpr int kLatentDim = 4;

struct Blob {
    double cx, cy;
    // Inverse covariance (symmetric 2x2) and amplitude, for the sharp and
    // blurred components.
    double ia, ib, ic, amp;
    double ja, jb, jc, bamp;
};

// 2x2 symmetric inverse and determinant.
void invert2x2(double a, double b, double c, double& ia, double& ib, double& ic, double& det) {
    det = a * c - b * b;
    ia = c / det;
    ib = -b / det;
    ic = a / det;
}

std::vector<Blob> make_blobs(const Scene& scene, Modality modality, const RenderConfig& cfg) {
    std::vector<Blob> blobs;
    blobs.reserve(scene.objects.size());
    const double ox = cfg.grid_w / 2.0, oy = cfg.grid_h / 2.0;  // observer at grid center
    for (const Box& b : scene.objects) {
        const double sx = (modality == Modality::Camera ? cfg.camera_sigma_tan : cfg.lidar_sigma) *
                          b.w / cfg.ref_extent;
        const double sy = (modality == Modality::Camera ? cfg.camera_sigma_tan : cfg.lidar_sigma) *
                          b.h / cfg.ref_extent;
        // Covariance: axis-aligned extent term, plus a range-direction smear
        // for camera renders.
        double ca = sx * sx, cb = 0.0, cc = sy * sy;
        const double lidar_det = ca * cc;
        if (modality == Modality::Camera) {
            double ux = b.cx - ox, uy = b.cy - oy;
            const double n = std::sqrt(ux * ux + uy * uy);
            if (n < 1e-9) {
                ux = 1.0;
                uy = 0.0;
            } else {
                ux /= n;
                uy /= n;
            }
            const double sr2 = cfg.camera_sigma_range * cfg.camera_sigma_range;
            ca += sr2 * ux * ux;
            cb += sr2 * ux * uy;
            cc += sr2 * uy * uy;
        }
        Blob blob;
        blob.cx = b.cx;
        blob.cy = b.cy;
        double det;
        invert2x2(ca, cb, cc, blob.ia, blob.ib, blob.ic, det);
        blob.amp = std::pow(lidar_det / det, cfg.camera_amp_power / 2.0);
        // Blurred component: covariance + 1 cell^2 per axis.
        double jdet;
        invert2x2(ca + 1.0, cb, cc + 1.0, blob.ja, blob.jb, blob.jc, jdet);
        blob.bamp = blob.amp * std::sqrt(det / jdet);
        blobs.push_back(blob);
    }
    return blobs;
}

void latent_at(const std::vector<Blob>& blobs, double x, double y,
               std::array<double, kLatentDim>& out) {
    double g = 0.0, gx = 0.0, gy = 0.0, blur = 0.0;
    for (const Blob& b : blobs) {
        const double dx = x - b.cx, dy = y - b.cy;
        const double qx = b.ia * dx + b.ib * dy;
        const double qy = b.ib * dx + b.ic * dy;
        const double e = -0.5 * (dx * qx + dy * qy);
        if (e > -20.0) {
            const double v = b.amp * std::exp(e);
            g += v;
            gx += -qx * v;
            gy += -qy * v;
        }
        const double rx = b.ja * dx + b.jb * dy;
        const double ry = b.jb * dx + b.jc * dy;
        const double f = -0.5 * (dx * rx + dy * ry);
        if (f > -20.0) blur += b.bamp * std::exp(f);
    }
    out[0] = g;
    out[1] = blur;
    out[2] = std::sqrt(gx * gx + gy * gy);  // edge magnitude
    out[3] = g * g;
}

void mixing_for(Modality modality, const RenderConfig& cfg, std::vector<double>& w,
                std::vector<double>& bias) {
    Rng rng(hash_combine(cfg.mixing_seed, static_cast<uint64_t>(modality), 0x313ull));
    w.resize(static_cast<size_t>(cfg.channels) * kLatentDim);
    bias.resize(static_cast<size_t>(cfg.channels));
    const double ws = cfg.mixing_scale / std::sqrt(static_cast<double>(kLatentDim));
    for (double& v : w) v = ws * std::fabs(rng.gaussian());
    for (double& v : bias) v = cfg.bias_scale * rng.gaussian();
}

}  // namespace

namespace {

Tensor render_visible(const Scene& scene, Modality modality, const std::vector<bool>& visible,
                      const RenderConfig& cfg) {
    check(modality == Modality::Lidar || modality == Modality::Camera,
          "render_features: modality must be lidar or camera");
    auto blobs = make_blobs(scene, modality, cfg);
    if (!visible.empty()) {
        std::vector<Blob> kept;
        for (size_t i = 0; i < blobs.size(); ++i)
            if (visible[i]) kept.push_back(blobs[i]);
        blobs = std::move(kept);
    }
    std::vector<double> w, bias;
    mixing_for(modality, cfg, w, bias);

    Tensor out({cfg.grid_h, cfg.grid_w, cfg.channels});
    std::array<double, kLatentDim> lat;
    for (int y = 0; y < cfg.grid_h; ++y) {
        for (int x = 0; x < cfg.grid_w; ++x) {
            latent_at(blobs, x + 0.5, y + 0.5, lat);
            double* cell = &out.at(y, x, 0);
            for (int c = 0; c < cfg.channels; ++c) {
                double acc = bias[static_cast<size_t>(c)];
                const double* wc = &w[static_cast<size_t>(c) * kLatentDim];
                for (int l = 0; l < kLatentDim; ++l) acc += wc[l] * lat[static_cast<size_t>(l)];
                cell[c] = std::tanh(acc);
            }
        }
    }
    return out;
}

}  // namespace

Tensor render_deterministic(const Scene& scene, Modality modality, const RenderConfig& cfg) {
    return render_visible(scene, modality, {}, cfg);
}

std::vector<bool> visible_objects(size_t count, uint64_t obs_seed, const RenderConfig& cfg) {
    std::vector<bool> vis(count, true);
    if (cfg.visibility_prob >= 1.0) return vis;
    Rng rng(hash_combine(obs_seed, 0x7157ull));
    for (size_t i = 0; i < count; ++i) vis[i] = rng.uniform() < cfg.visibility_prob;
    return vis;
}

void add_render_noise(Tensor& map, Modality modality, uint64_t obs_seed,
                      const RenderConfig& cfg) {
    const double std_ = modality == Modality::Camera ? cfg.camera_noise_std : cfg.lidar_noise_std;
    if (std_ == 0.0) return;
    Rng rng(hash_combine(obs_seed, 0x401dull, modality == Modality::Camera));
    for (double& v : map.data) v += std_ * rng.gaussian();
}

FeatureMap render_observation(const Scene& scene, Modality modality, uint64_t vis_seed,
                              uint64_t noise_seed, const RenderConfig& cfg) {
    FeatureMap fm;
    fm.tensor = render_visible(scene, modality,
                               visible_objects(scene.objects.size(), vis_seed, cfg), cfg);
    add_render_noise(fm.tensor, modality, noise_seed, cfg);
    fm.modality = modality;
    return fm;
}

FeatureMap render_features(const Scene& scene, Modality modality, uint64_t obs_seed,
                           const RenderConfig& cfg) {
    return render_observation(scene, modality, obs_seed, obs_seed, cfg);
}

}  // namespace cmsc
