#include "cmsc/selector.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

namespace cmsc {

int selection_count(double lambda, int grid_h, int grid_w) {
    check(lambda > 0.0 && lambda <= 1.0, "selection_count: lambda must be in (0, 1], got " +
                                             std::to_string(lambda));
    return static_cast<int>(std::ceil(lambda * grid_h * grid_w));
}

std::vector<int> top_k_indices(const Tensor& importance, int k) {
    const int n = static_cast<int>(importance.numel());
    check(k >= 0 && k <= n, "top_k_indices: k out of range");
    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](int a, int b) {
        const double va = importance.data[static_cast<size_t>(a)];
        const double vb = importance.data[static_cast<size_t>(b)];
        if (va != vb) return va > vb;
        return a < b;  // deterministic tie-break: lowest linear index wins
    });
    order.resize(static_cast<size_t>(k));
    std::sort(order.begin(), order.end());
    return order;
}

SelectResult select(const FeatureMap& map, const ImportanceMap& imp, double lambda) {
    const int H = map.tensor.dim(0), W = map.tensor.dim(1), C = map.tensor.dim(2);
    check(imp.values.ndim() == 2 && imp.values.dim(0) == H && imp.values.dim(1) == W,
          "select: importance map shape mismatch");
    const int K = selection_count(lambda, H, W);
    SelectResult r;
    r.pack.indices = top_k_indices(imp.values, K);
    r.pack.grid_h = H;
    r.pack.grid_w = W;
    r.pack.lambda = lambda;
    r.pack.features = Tensor({K, C});
    r.masked.modality = map.modality;
    r.masked.vehicle_id = map.vehicle_id;
    r.masked.tensor = Tensor({H, W, C});
    for (int row = 0; row < K; ++row) {
        const int idx = r.pack.indices[static_cast<size_t>(row)];
        const double gate = imp.values.data[static_cast<size_t>(idx)];
        const double* src = map.tensor.data.data() + static_cast<size_t>(idx) * C;
        double* dst = r.masked.tensor.data.data() + static_cast<size_t>(idx) * C;
        double* packed = r.pack.features.data.data() + static_cast<size_t>(row) * C;
        for (int c = 0; c < C; ++c) {
            const double v = src[c] * gate;
            dst[c] = v;
            packed[c] = v;
        }
    }
    return r;
}

FeatureMap scatter(const SparseFeaturePack& pack, const Tensor& decoded, Modality modality) {
    const int K = pack.k();
    check(decoded.ndim() == 2 && decoded.dim(0) == K,
          "scatter: decoded row count " + std::to_string(decoded.ndim() == 2 ? decoded.dim(0) : -1) +
              " does not match pack K = " + std::to_string(K));
    const int C = decoded.dim(1);
    FeatureMap out;
    out.modality = modality;
    out.tensor = Tensor({pack.grid_h, pack.grid_w, C});
    const int cells = pack.grid_h * pack.grid_w;
    for (int row = 0; row < K; ++row) {
        const int idx = pack.indices[static_cast<size_t>(row)];
        check(idx >= 0 && idx < cells, "scatter: index " + std::to_string(idx) +
                                           " outside grid of " + std::to_string(cells) + " cells");
        std::memcpy(out.tensor.data.data() + static_cast<size_t>(idx) * C,
                    decoded.data.data() + static_cast<size_t>(row) * C, sizeof(double) * C);
    }
    return out;
}

// Pack wire format: u32 K, f64 lambda, u32 H, u32 W, K x u32 indices,
// K*C f64 row-major features (C inferred), all little-endian.
std::vector<uint8_t> SparseFeaturePack::to_bytes() const {
    std::vector<uint8_t> out;
    auto put = [&out](const void* p, size_t n) {
        const uint8_t* b = static_cast<const uint8_t*>(p);
        out.insert(out.end(), b, b + n);
    };
    const uint32_t K = static_cast<uint32_t>(k());
    const uint32_t H = static_cast<uint32_t>(grid_h), W = static_cast<uint32_t>(grid_w);
    const uint32_t C = static_cast<uint32_t>(K > 0 ? features.dim(1) : 0);
    put(&K, 4);
    put(&lambda, 8);
    put(&H, 4);
    put(&W, 4);
    put(&C, 4);
    for (int idx : indices) {
        const uint32_t u = static_cast<uint32_t>(idx);
        put(&u, 4);
    }
    put(features.data.data(), features.data.size() * 8);
    return out;
}

SparseFeaturePack SparseFeaturePack::from_bytes(const std::vector<uint8_t>& bytes) {
    size_t off = 0;
    auto get = [&](void* p, size_t n) {
        check(off + n <= bytes.size(), "SparseFeaturePack::from_bytes: truncated input");
        std::memcpy(p, bytes.data() + off, n);
        off += n;
    };
    uint32_t K = 0, H = 0, W = 0, C = 0;
    SparseFeaturePack pack;
    get(&K, 4);
    get(&pack.lambda, 8);
    get(&H, 4);
    get(&W, 4);
    get(&C, 4);
    pack.grid_h = static_cast<int>(H);
    pack.grid_w = static_cast<int>(W);
    pack.indices.resize(K);
    for (uint32_t i = 0; i < K; ++i) {
        uint32_t u = 0;
        get(&u, 4);
        pack.indices[i] = static_cast<int>(u);
    }
    pack.features = Tensor({static_cast<int>(K), static_cast<int>(C)});
    get(pack.features.data.data(), pack.features.data.size() * 8);
    return pack;
}

SelectorHead::SelectorHead(std::string name, int channels) {
    kernels::ConvSpec spec;
    spec.cin = channels;
    spec.cout = 1;
    conv = Layer::conv2d(name + ".conv", spec);
    sig_ = Layer::sigmoid();
}

ImportanceMap SelectorHead::forward(const FeatureMap& map, Cache& cache, bool training) {
    check(map.modality == Modality::Standard, "importance: input must be in the standard space");
    cache.valid = true;
    Tensor z = conv.forward(map.tensor, cache.c_conv, training);
    Tensor s = sig_.forward(z, cache.c_sig, training);
    ImportanceMap imp;
    imp.values = Tensor::from({map.tensor.dim(0), map.tensor.dim(1)}, std::move(s.data));
    return imp;
}

Tensor SelectorHead::backward(const Cache& cache, const Tensor& grad_imp, GradStore* sink) const {
    check(cache.valid, "importance: backward without cached forward activations");
    Tensor g = grad_imp;
    g.shape = {grad_imp.dim(0), grad_imp.dim(1), 1};
    Tensor gz = sig_.backward(cache.c_sig, g, sink);
    return conv.backward(cache.c_conv, gz, sink);
}

}  // namespace cmsc
