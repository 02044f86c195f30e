#include "cmsc/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "cmsc/rng.hpp"

namespace cmsc {

double iou(const Box& a, const Box& b) {
    const double ax0 = a.cx - a.w / 2, ax1 = a.cx + a.w / 2;
    const double ay0 = a.cy - a.h / 2, ay1 = a.cy + a.h / 2;
    const double bx0 = b.cx - b.w / 2, bx1 = b.cx + b.w / 2;
    const double by0 = b.cy - b.h / 2, by1 = b.cy + b.h / 2;
    const double ix = std::max(0.0, std::min(ax1, bx1) - std::max(ax0, bx0));
    const double iy = std::max(0.0, std::min(ay1, by1) - std::max(ay0, by0));
    const double inter = ix * iy;
    const double uni = a.w * a.h + b.w * b.h - inter;
    return uni <= 0.0 ? 0.0 : inter / uni;
}

std::string Scene::to_text() const {
    std::string out;
    char line[160];
    for (const Box& b : objects) {
        std::snprintf(line, sizeof(line), "%.17g %.17g %.17g %.17g %d\n", b.cx, b.cy, b.w, b.h,
                      b.class_id);
        out += line;
    }
    return out;
}

Scene Scene::from_text(const std::string& text, int bounds_h, int bounds_w) {
    Scene s;
    s.bounds_h = bounds_h;
    s.bounds_w = bounds_w;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        Box b;
        std::istringstream ls(line);
        check(static_cast<bool>(ls >> b.cx >> b.cy >> b.w >> b.h >> b.class_id),
              "Scene::from_text: malformed line: " + line);
        s.objects.push_back(b);
    }
    return s;
}

Scene sample_scene(uint64_t seed, const SceneConfig& cfg) {
    check(cfg.min_objects >= 0 && cfg.max_objects >= cfg.min_objects,
          "sample_scene: invalid object count range");
    check(cfg.min_size > 0 && cfg.max_size >= cfg.min_size, "sample_scene: invalid size range");
    check(cfg.max_size <= std::min(cfg.grid_h, cfg.grid_w),
          "sample_scene: objects cannot fit inside bounds");

    Scene scene;
    scene.bounds_h = cfg.grid_h;
    scene.bounds_w = cfg.grid_w;
    scene.seed = seed;

    Rng rng(hash_combine(seed, 0x5ce3eull));
    const int count =
        cfg.min_objects +
        static_cast<int>(cfg.max_objects > cfg.min_objects
                             ? rng.uniform_index(cfg.max_objects - cfg.min_objects + 1)
                             : 0);
    for (int i = 0; i < count; ++i) {
        bool placed = false;
        for (int attempt = 0; attempt < cfg.max_retries; ++attempt) {
            Box b;
            b.w = rng.uniform(cfg.min_size, cfg.max_size);
            b.h = rng.uniform(cfg.min_size, cfg.max_size);
            b.cx = rng.uniform(b.w / 2, cfg.grid_w - b.w / 2);
            b.cy = rng.uniform(b.h / 2, cfg.grid_h - b.h / 2);
            bool ok = true;
            for (const Box& other : scene.objects)
                if (iou(b, other) >= cfg.max_gt_iou) {
                    ok = false;
                    break;
                }
            if (ok) {
                scene.objects.push_back(b);
                placed = true;
                break;
            }
        }
        check(placed, "sample_scene: could not place object " + std::to_string(i) + " within " +
                          std::to_string(cfg.max_retries) +
                          " retries; config is too dense for the bounds");
    }
    return scene;
}

CellTargets ground_truth_targets(const Scene& scene, int grid_h, int grid_w) {
    CellTargets t;
    t.objectness = Tensor({grid_h, grid_w});
    t.regression = Tensor({grid_h, grid_w, 4});
    for (int y = 0; y < grid_h; ++y) {
        for (int x = 0; x < grid_w; ++x) {
            const double cx = x + 0.5, cy = y + 0.5;
            int best = -1;
            double best_d2 = 0.0;
            for (size_t i = 0; i < scene.objects.size(); ++i) {
                const Box& b = scene.objects[i];
                if (cx >= b.cx - b.w / 2 && cx < b.cx + b.w / 2 && cy >= b.cy - b.h / 2 &&
                    cy < b.cy + b.h / 2) {
                    const double d2 = (b.cx - cx) * (b.cx - cx) + (b.cy - cy) * (b.cy - cy);
                    if (best < 0 || d2 < best_d2) {
                        best = static_cast<int>(i);
                        best_d2 = d2;
                    }
                }
            }
            if (best >= 0) {
                const Box& b = scene.objects[static_cast<size_t>(best)];
                t.objectness.data[static_cast<size_t>(y) * grid_w + x] = 1.0;
                double* r = &t.regression.at(y, x, 0);
                r[0] = b.cx - cx;
                r[1] = b.cy - cy;
                r[2] = std::log(b.w);
                r[3] = std::log(b.h);
            }
        }
    }
    return t;
}

}  // namespace cmsc
