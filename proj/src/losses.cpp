#include "cmsc/losses.hpp"

#include <cmath>

#include "cmsc/common.hpp"

namespace cmsc {

namespace {
// log(sigmoid(z)) computed stably.
double log_sigmoid(double z) { return z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z)); }
}  // namespace

LossGrad focal_cls_loss(const Tensor& logits, const Tensor& targets, double alpha, double gamma) {
    check(logits.same_shape(targets), "focal_cls_loss: shape mismatch " + logits.shape_str() +
                                          " vs " + targets.shape_str());
    const double n = static_cast<double>(logits.numel());
    LossGrad out;
    out.grad = Tensor(logits.shape);
    double acc = 0.0;
    for (size_t i = 0; i < logits.data.size(); ++i) {
        const double z = logits.data[i];
        const double p = 1.0 / (1.0 + std::exp(-z));
        if (targets.data[i] > 0.5) {
            const double q = 1.0 - p;
            acc += -alpha * std::pow(q, gamma) * log_sigmoid(z);
            out.grad.data[i] = alpha * std::pow(q, gamma) * (gamma * p * log_sigmoid(z) - q) / n;
        } else {
            acc += -(1.0 - alpha) * std::pow(p, gamma) * log_sigmoid(-z);
            out.grad.data[i] =
                (1.0 - alpha) * std::pow(p, gamma) * (p - gamma * (1.0 - p) * log_sigmoid(-z)) / n;
        }
    }
    out.value = acc / n;
    return out;
}

LossGrad smooth_l1_reg_loss(const Tensor& pred, const Tensor& target, const Tensor& mask) {
    check(pred.same_shape(target), "smooth_l1_reg_loss: pred/target shape mismatch");
    check(pred.ndim() == 3 && pred.dim(2) == 4, "smooth_l1_reg_loss: expected HxWx4 grids");
    check(mask.numel() * 4 == pred.numel(), "smooth_l1_reg_loss: mask shape mismatch");
    LossGrad out;
    out.grad = Tensor(pred.shape);
    long long npos = 0;
    for (double v : mask.data) npos += v > 0.5 ? 1 : 0;
    if (npos == 0) {
        out.value = 0.0;
        return out;
    }
    const double denom = static_cast<double>(npos) * 4.0;
    double acc = 0.0;
    for (long long i = 0; i < mask.numel(); ++i) {
        if (mask.data[static_cast<size_t>(i)] <= 0.5) continue;
        for (int d = 0; d < 4; ++d) {
            const size_t idx = static_cast<size_t>(i) * 4 + static_cast<size_t>(d);
            const double e = pred.data[idx] - target.data[idx];
            if (std::fabs(e) <= 1.0) {
                acc += 0.5 * e * e;
                out.grad.data[idx] = e / denom;
            } else {
                acc += std::fabs(e) - 0.5;
                out.grad.data[idx] = (e > 0.0 ? 1.0 : -1.0) / denom;
            }
        }
    }
    out.value = acc / denom;
    return out;
}

LossGrad mse_loss(const Tensor& a, const Tensor& b) {
    LossGrad out;
    out.value = mse(a, b);
    out.grad = mse_grad(a, b);
    return out;
}

double LossReport::component(const std::string& name) const {
    for (size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return components[i];
    contract_fail("LossReport: unknown component '" + name + "'");
}

}  // namespace cmsc
