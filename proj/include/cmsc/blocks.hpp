#pragma once

#include "cmsc/nn.hpp"

namespace cmsc {

// Squeeze-and-Excitation: global average pool -> bottleneck MLP -> sigmoid
// channel gates -> rescale the input per channel.
class SEBlock {
public:
    SEBlock() = default;
    SEBlock(std::string name, int channels, int reduction = 4);

    struct Cache {
        bool valid = false;
        Tensor input;
        Tensor scales;
        LayerCache c_pool, c_fc1, c_relu, c_fc2, c_sig, c_scale;
    };

    Tensor forward(const Tensor& x, Cache& cache, bool training);
    Tensor backward(const Cache& cache, const Tensor& grad_out, GradStore* sink) const;

    void register_params(ParamStore& store);
    void init_weights(Rng& rng);

    int channels() const { return channels_; }
    int reduction() const { return reduction_; }
    Layer fc1, fc2;

private:
    int channels_ = 0, reduction_ = 4;
    Layer pool_, relu_, sig_, scale_;
};

// ConvNeXt-style residual block: 7x7 depthwise conv -> per-position
// layernorm -> 1x1 expand (x4) -> GELU -> 1x1 project -> add input.
class ConvNeXtBlock {
public:
    ConvNeXtBlock() = default;
    ConvNeXtBlock(std::string name, int channels);

    struct Cache {
        bool valid = false;
        Tensor input;
        LayerCache c_dw, c_ln, c_pw1, c_gelu, c_pw2;
    };

    Tensor forward(const Tensor& x, Cache& cache, bool training);
    Tensor backward(const Cache& cache, const Tensor& grad_out, GradStore* sink) const;

    void register_params(ParamStore& store);
    void init_weights(Rng& rng);

    Layer dw, ln, pw1, pw2;

private:
    int channels_ = 0;
    Layer gelu_;
};

// Spec-level single-shot entry points (stateful caches inside the blocks).
Tensor se_block(SEBlock& block, const Tensor& input);
Tensor convnext_block(ConvNeXtBlock& block, const Tensor& input);

}  // namespace cmsc
