#pragma once

#include <cstdint>
#include <vector>

#include "cmsc/nn.hpp"
#include "cmsc/selector.hpp"

namespace cmsc {

// Complex baseband symbols stored as interleaved re/im pairs, shape
// {rows, cols, 2}. `power` is the producer-declared mean |c|^2; the channel
// only accepts blocks declared at unit power.
struct SymbolBlock {
    Tensor iq;
    double power = 0.0;

    int rows() const { return iq.ndim() == 3 ? iq.dim(0) : 0; }
    int cols() const { return iq.ndim() == 3 ? iq.dim(1) : 0; }

    // Interleaved little-endian float32 I/Q, for replay fixtures.
    std::vector<uint8_t> to_bytes() const;
    static SymbolBlock from_bytes(const std::vector<uint8_t>& bytes, int rows, int cols);
};

double measured_power(const Tensor& iq);

// Scale so that the mean symbol energy is exactly 1. All-zero input is an
// error (the scale is undefined).
SymbolBlock power_normalize(const SymbolBlock& block);
Tensor power_normalize_forward(const Tensor& iq);
// Gradient of y = x / sqrt(mean|x|^2) given the pre-normalization tensor.
Tensor power_normalize_backward(const Tensor& iq_pre, const Tensor& grad_out);

// Semantic encoder: two Conv-BN-ReLU blocks over the K axis (C -> 2C -> 2C)
// plus a linear head emitting 2C reals per row, paired (even, odd) into C
// complex symbols, then power normalization.
class JsccEncoder {
public:
    JsccEncoder() = default;
    JsccEncoder(std::string name, int channels);

    struct Cache {
        bool valid = false;
        int k = 0;
        Tensor pre_norm;  // K x C x 2 before power normalization
        LayerCache c1, b1, r1, c2, b2, r2, ch;
    };

    SymbolBlock forward(const Tensor& pack_features, Cache& cache, bool training);
    // grad w.r.t. pack features (K x C) given grad w.r.t. normalized iq.
    Tensor backward(const Cache& cache, const Tensor& grad_iq, GradStore* sink) const;

    void register_params(ParamStore& store);
    void init_weights(Rng& rng);

    Layer conv1, bn1, conv2, bn2, head;

private:
    int channels_ = 0;
    Layer relu1_, relu2_;
};

// Semantic decoder mirroring the encoder: complex -> 2C reals per row, two
// Deconv-BN-ReLU blocks, linear head down to C reals per row.
class JsccDecoder {
public:
    JsccDecoder() = default;
    JsccDecoder(std::string name, int channels);

    struct Cache {
        bool valid = false;
        int k = 0;
        LayerCache c1, b1, r1, c2, b2, r2, ch;
    };

    Tensor forward(const SymbolBlock& received, Cache& cache, bool training);
    // grad w.r.t. the received iq (K x C x 2) given grad w.r.t. the K x C output.
    Tensor backward(const Cache& cache, const Tensor& grad_out, GradStore* sink) const;

    void register_params(ParamStore& store);
    void init_weights(Rng& rng);

    Layer deconv1, bn1, deconv2, bn2, head;

private:
    int channels_ = 0;
    Layer relu1_, relu2_;
};

}  // namespace cmsc
