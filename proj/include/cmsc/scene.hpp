#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cmsc/common.hpp"
#include "cmsc/tensor.hpp"

namespace cmsc {

// Axis-aligned BEV box in cell units, single class (0 = vehicle).
struct Box {
    double cx = 0, cy = 0, w = 0, h = 0;
    int class_id = 0;
};

double iou(const Box& a, const Box& b);

struct SceneConfig {
    int grid_h = 32, grid_w = 32;
    int min_objects = 2, max_objects = 6;
    double min_size = 3.0, max_size = 6.0;
    double max_gt_iou = 0.3;  // rejection-sampling overlap bound
    int max_retries = 100;
};

struct Scene {
    std::vector<Box> objects;
    int bounds_h = 0, bounds_w = 0;
    uint64_t seed = 0;

    std::string to_text() const;
    static Scene from_text(const std::string& text, int bounds_h, int bounds_w);
};

// Deterministic in seed. Boxes are non-degenerate, inside bounds, and any
// two ground-truth boxes overlap below cfg.max_gt_iou.
Scene sample_scene(uint64_t seed, const SceneConfig& cfg);

// Per-cell supervision for the detection head: objectness in {0,1} (cell
// center inside a box) and (dx, dy, log w, log h) relative to the cell
// center at positive cells.
struct CellTargets {
    Tensor objectness;  // H x W
    Tensor regression;  // H x W x 4
};

CellTargets ground_truth_targets(const Scene& scene, int grid_h, int grid_w);

}  // namespace cmsc
