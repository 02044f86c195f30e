#include "cmsc/jscc.hpp"

#include <cmath>
#include <cstring>

namespace cmsc {

std::vector<uint8_t> SymbolBlock::to_bytes() const {
    std::vector<uint8_t> out(iq.data.size() * 4);
    for (size_t i = 0; i < iq.data.size(); ++i) {
        const float f = static_cast<float>(iq.data[i]);
        std::memcpy(out.data() + i * 4, &f, 4);
    }
    return out;
}

SymbolBlock SymbolBlock::from_bytes(const std::vector<uint8_t>& bytes, int rows, int cols) {
    check(bytes.size() == static_cast<size_t>(rows) * cols * 2 * 4,
          "SymbolBlock::from_bytes: byte count does not match rows x cols");
    SymbolBlock b;
    b.iq = Tensor({rows, cols, 2});
    for (size_t i = 0; i < b.iq.data.size(); ++i) {
        float f;
        std::memcpy(&f, bytes.data() + i * 4, 4);
        b.iq.data[i] = static_cast<double>(f);
    }
    b.power = measured_power(b.iq);
    return b;
}

double measured_power(const Tensor& iq) {
    const long long n = iq.numel() / 2;
    double acc = 0.0;
    for (double v : iq.data) acc += v * v;
    return acc / static_cast<double>(n);
}

Tensor power_normalize_forward(const Tensor& iq) {
    const double p = measured_power(iq);
    check(p > 0.0, "power_normalize: all-zero symbol block has undefined scale");
    Tensor y = iq;
    y.scale_(1.0 / std::sqrt(p));
    return y;
}

SymbolBlock power_normalize(const SymbolBlock& block) {
    SymbolBlock out;
    out.iq = power_normalize_forward(block.iq);
    out.power = 1.0;
    return out;
}

Tensor power_normalize_backward(const Tensor& iq_pre, const Tensor& grad_out) {
    const double p = measured_power(iq_pre);
    check(p > 0.0, "power_normalize_backward: all-zero input");
    const long long n = iq_pre.numel() / 2;
    double dot = 0.0;
    for (size_t i = 0; i < iq_pre.data.size(); ++i) dot += grad_out.data[i] * iq_pre.data[i];
    const double inv_sqrt = 1.0 / std::sqrt(p);
    const double k = dot * inv_sqrt / (p * static_cast<double>(n));
    Tensor gin(iq_pre.shape);
    for (size_t i = 0; i < iq_pre.data.size(); ++i)
        gin.data[i] = grad_out.data[i] * inv_sqrt - k * iq_pre.data[i];
    return gin;
}

namespace {
kernels::ConvSpec rowconv(int cin, int cout, int k) {
    kernels::ConvSpec s;
    s.kh = k;
    s.kw = 1;
    s.py = (k - 1) / 2;
    s.cin = cin;
    s.cout = cout;
    return s;
}
}  // namespace

JsccEncoder::JsccEncoder(std::string name, int channels) : channels_(channels) {
    conv1 = Layer::conv2d(name + ".conv1", rowconv(channels, 2 * channels, 3));
    bn1 = Layer::batchnorm(name + ".bn1", 2 * channels);
    conv2 = Layer::conv2d(name + ".conv2", rowconv(2 * channels, 2 * channels, 3));
    bn2 = Layer::batchnorm(name + ".bn2", 2 * channels);
    head = Layer::conv2d(name + ".head", rowconv(2 * channels, 2 * channels, 1));
    relu1_ = Layer::relu();
    relu2_ = Layer::relu();
}

SymbolBlock JsccEncoder::forward(const Tensor& pack_features, Cache& cache, bool training) {
    check(pack_features.ndim() == 2 && pack_features.dim(1) == channels_,
          "encode: expected KxC features with C = " + std::to_string(channels_) + ", got " +
              pack_features.shape_str());
    const int K = pack_features.dim(0);
    check(K > 0, "encode: empty pack");
    cache.valid = true;
    cache.k = K;

    Tensor x = pack_features;
    x.shape = {K, 1, channels_};
    Tensor t = conv1.forward(x, cache.c1, training);
    t = bn1.forward(t, cache.b1, training);
    t = relu1_.forward(t, cache.r1, training);
    t = conv2.forward(t, cache.c2, training);
    t = bn2.forward(t, cache.b2, training);
    t = relu2_.forward(t, cache.r2, training);
    t = head.forward(t, cache.ch, training);
    // 2C reals per row -> C complex symbols, I/Q from (even, odd) channels.
    cache.pre_norm = Tensor::from({K, channels_, 2}, std::move(t.data));
    SymbolBlock out;
    out.iq = power_normalize_forward(cache.pre_norm);
    out.power = 1.0;
    return out;
}

Tensor JsccEncoder::backward(const Cache& cache, const Tensor& grad_iq, GradStore* sink) const {
    check(cache.valid, "encode: backward without cached forward activations");
    Tensor g = power_normalize_backward(cache.pre_norm, grad_iq);
    g.shape = {cache.k, 1, 2 * channels_};
    g = head.backward(cache.ch, g, sink);
    g = relu2_.backward(cache.r2, g, sink);
    g = bn2.backward(cache.b2, g, sink);
    g = conv2.backward(cache.c2, g, sink);
    g = relu1_.backward(cache.r1, g, sink);
    g = bn1.backward(cache.b1, g, sink);
    g = conv1.backward(cache.c1, g, sink);
    g.shape = {cache.k, channels_};
    return g;
}

void JsccEncoder::register_params(ParamStore& store) {
    store.register_layer(conv1);
    store.register_layer(bn1);
    store.register_layer(conv2);
    store.register_layer(bn2);
    store.register_layer(head);
}

void JsccEncoder::init_weights(Rng& rng) {
    conv1.init_weights(rng);
    conv2.init_weights(rng);
    head.init_weights(rng);
}

JsccDecoder::JsccDecoder(std::string name, int channels) : channels_(channels) {
    deconv1 = Layer::deconv2d(name + ".deconv1", rowconv(2 * channels, 2 * channels, 3));
    bn1 = Layer::batchnorm(name + ".bn1", 2 * channels);
    deconv2 = Layer::deconv2d(name + ".deconv2", rowconv(2 * channels, 2 * channels, 3));
    bn2 = Layer::batchnorm(name + ".bn2", 2 * channels);
    head = Layer::conv2d(name + ".head", rowconv(2 * channels, channels, 1));
    relu1_ = Layer::relu();
    relu2_ = Layer::relu();
}

Tensor JsccDecoder::forward(const SymbolBlock& received, Cache& cache, bool training) {
    check(received.iq.ndim() == 3 && received.iq.dim(1) == channels_ && received.iq.dim(2) == 2,
          "decode: expected KxCx2 symbols with C = " + std::to_string(channels_) + ", got " +
              received.iq.shape_str());
    const int K = received.iq.dim(0);
    check(K > 0, "decode: empty symbol block");
    cache.valid = true;
    cache.k = K;

    Tensor x = received.iq;
    x.shape = {K, 1, 2 * channels_};
    Tensor t = deconv1.forward(x, cache.c1, training);
    t = bn1.forward(t, cache.b1, training);
    t = relu1_.forward(t, cache.r1, training);
    t = deconv2.forward(t, cache.c2, training);
    t = bn2.forward(t, cache.b2, training);
    t = relu2_.forward(t, cache.r2, training);
    t = head.forward(t, cache.ch, training);
    t.shape = {K, channels_};
    return t;
}

Tensor JsccDecoder::backward(const Cache& cache, const Tensor& grad_out, GradStore* sink) const {
    check(cache.valid, "decode: backward without cached forward activations");
    Tensor g = grad_out;
    g.shape = {cache.k, 1, channels_};
    g = head.backward(cache.ch, g, sink);
    g = relu2_.backward(cache.r2, g, sink);
    g = bn2.backward(cache.b2, g, sink);
    g = deconv2.backward(cache.c2, g, sink);
    g = relu1_.backward(cache.r1, g, sink);
    g = bn1.backward(cache.b1, g, sink);
    g = deconv1.backward(cache.c1, g, sink);
    g.shape = {cache.k, channels_, 2};
    return g;
}

void JsccDecoder::register_params(ParamStore& store) {
    store.register_layer(deconv1);
    store.register_layer(bn1);
    store.register_layer(deconv2);
    store.register_layer(bn2);
    store.register_layer(head);
}

void JsccDecoder::init_weights(Rng& rng) {
    deconv1.init_weights(rng);
    deconv2.init_weights(rng);
    head.init_weights(rng);
}

}  // namespace cmsc
