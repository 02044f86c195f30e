#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cmsc/kernels.hpp"
#include "cmsc/rng.hpp"
#include "cmsc/tensor.hpp"

namespace cmsc {

enum class LayerKind {
    Conv2d,
    Deconv2d,
    Dense,
    BatchNorm,
    ReLU,
    GELU,
    Sigmoid,
    GlobalAvgPool,
    LayerNorm,
    ResidualAdd,
    ChannelScale,
};

const char* layer_kind_name(LayerKind k);

// Per-call activation record. Networks that evaluate the same layer on
// several inputs within one loss keep one cache per evaluation.
struct LayerCache {
    bool valid = false;
    bool training = false;
    Tensor input;
    Tensor input2;  // binary kinds
    Tensor aux;     // kind-specific (sigmoid: y; BN/LN: xhat)
    Tensor aux2;    // BN: per-channel mean|invstd; LN: per-position invstd
};

// Accumulating gradient sink keyed by parameter name.
class GradStore {
public:
    void add(const std::string& name, const Tensor& g);
    const Tensor* find(const std::string& name) const;
    size_t size() const { return grads_.size(); }
    void clear();
    void scale(double s);
    void merge(const GradStore& other);
    const std::vector<std::pair<std::string, Tensor>>& items() const { return items_; }

private:
    std::unordered_map<std::string, size_t> grads_;
    std::vector<std::pair<std::string, Tensor>> items_;
};

// One dense-tensor layer. Parameters live in `params` (see param_names());
// BatchNorm additionally owns running-stat buffers.
class Layer {
public:
    LayerKind kind = LayerKind::ReLU;
    std::string name;  // parameter registration prefix; empty for stateless kinds
    kernels::ConvSpec conv;
    int features_in = 0, features_out = 0;  // dense
    int channels = 0;                       // batchnorm / layernorm
    double eps = 1e-5;
    double momentum = 0.1;  // batchnorm running-stat update weight
    // When set, training-mode BatchNorm records batch stats in the cache
    // instead of touching the running buffers; callers apply them later via
    // apply_deferred_updates. Keeps scene-parallel training race-free and
    // bit-equal to the serial update order.
    bool defer_buffer_updates = false;

    std::vector<Tensor> params;
    std::vector<Tensor> buffers;  // batchnorm: running_mean, running_var

    static Layer conv2d(std::string name, const kernels::ConvSpec& spec);
    static Layer deconv2d(std::string name, const kernels::ConvSpec& spec);
    static Layer dense(std::string name, int in, int out);
    static Layer batchnorm(std::string name, int channels);
    static Layer layernorm(std::string name, int channels);
    static Layer relu();
    static Layer gelu();
    static Layer sigmoid();
    static Layer global_avg_pool();
    static Layer residual_add();
    static Layer channel_scale(std::string name, int channels);

    std::vector<std::string> param_names() const;
    std::vector<std::string> buffer_names() const;

    bool is_binary() const {
        return kind == LayerKind::ResidualAdd || kind == LayerKind::ChannelScale;
    }

    // training=true uses batch statistics in BatchNorm (and updates running
    // stats); training=false uses running stats.
    Tensor forward(const Tensor& x, LayerCache& cache, bool training);
    Tensor forward2(const Tensor& a, const Tensor& b, LayerCache& cache, bool training);

    // Returns grad w.r.t. the input; parameter grads are accumulated into
    // `sink` under this layer's name (pass nullptr to skip them).
    Tensor backward(const LayerCache& cache, const Tensor& grad_out, GradStore* sink) const;
    std::pair<Tensor, Tensor> backward2(const LayerCache& cache, const Tensor& grad_out,
                                        GradStore* sink) const;

    // Applies the batch statistics recorded in a training-mode cache to the
    // running buffers (BatchNorm only; no-op for other kinds).
    void apply_deferred_updates(const LayerCache& cache);

    void init_weights(Rng& rng);

    // Convenience single-shot API (stateful cache held by the layer).
    LayerCache last_cache;
};

// Spec-style stateless entry points over the stateful cache.
Tensor forward(Layer& layer, const Tensor& input);
std::pair<Tensor, GradStore> backward(Layer& layer, const Tensor& input, const Tensor& grad_output);

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Registry of named parameter tensors with per-parameter Adam state and
// freeze flags. Non-owning: tensors live in their layers.
class ParamStore {
public:
    struct Entry {
        std::string name;
        Tensor* value = nullptr;
        Tensor m, v;
        long long step = 0;
        bool frozen = false;
        bool buffer = false;
    };

    void add(const std::string& name, Tensor* value, bool buffer = false);
    void register_layer(Layer& layer);

    bool has(const std::string& name) const { return index_.count(name) > 0; }
    Tensor* value(const std::string& name);
    const Tensor* value(const std::string& name) const;

    void set_frozen_prefix(const std::string& prefix, bool frozen);
    void set_all_frozen(bool frozen);
    bool is_frozen(const std::string& name) const;

    // Standard Adam on unfrozen parameters appearing in `grads`.
    // A gradient whose key is absent from the store is a contract error.
    void adam_step(const GradStore& grads, double lr, const AdamConfig& cfg = {});

    const std::vector<Entry>& entries() const { return entries_; }
    std::vector<Entry>& entries() { return entries_; }

    // FNV-1a over raw bytes of the selected tensors (frozen-contract tests).
    uint64_t fingerprint(const std::string& prefix = "") const;

private:
    std::vector<Entry> entries_;
    std::unordered_map<std::string, size_t> index_;
};

}  // namespace cmsc
