#pragma once

#include <string>
#include <vector>

#include "cmsc/tensor.hpp"

namespace cmsc {

struct LossGrad {
    double value = 0.0;
    Tensor grad;
};

// Sigmoid focal loss (alpha = 0.25, gamma = 2), mean over all cells.
// Targets are {0,1}; grad is w.r.t. the logits.
LossGrad focal_cls_loss(const Tensor& logits, const Tensor& targets, double alpha = 0.25,
                        double gamma = 2.0);

// Smooth-L1 (delta = 1) averaged over positive cells x 4 regression dims;
// zero on an empty mask.
LossGrad smooth_l1_reg_loss(const Tensor& pred, const Tensor& target, const Tensor& mask);

// MSE with gradient w.r.t. the first argument.
LossGrad mse_loss(const Tensor& a, const Tensor& b);

// Weighted loss composition; `total` always equals the weighted sum of the
// components.
struct LossReport {
    std::vector<std::string> names;
    std::vector<double> components;
    std::vector<double> weights;
    double total = 0.0;

    void add(const std::string& name, double value, double weight = 1.0) {
        names.push_back(name);
        components.push_back(value);
        weights.push_back(weight);
        total += weight * value;
    }
    double weighted_sum() const {
        double acc = 0.0;
        for (size_t i = 0; i < components.size(); ++i) acc += weights[i] * components[i];
        return acc;
    }
    double component(const std::string& name) const;
};

}  // namespace cmsc
