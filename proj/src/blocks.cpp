#include "cmsc/blocks.hpp"

namespace cmsc {

SEBlock::SEBlock(std::string name, int channels, int reduction)
    : channels_(channels), reduction_(reduction) {
    check(reduction > 0 && channels % reduction == 0,
          "se_block '" + name + "': channels " + std::to_string(channels) +
              " not divisible by reduction " + std::to_string(reduction));
    fc1 = Layer::dense(name + ".fc1", channels, channels / reduction);
    fc2 = Layer::dense(name + ".fc2", channels / reduction, channels);
    pool_ = Layer::global_avg_pool();
    relu_ = Layer::relu();
    sig_ = Layer::sigmoid();
    scale_ = Layer::channel_scale(name + ".scale", channels);
}

Tensor SEBlock::forward(const Tensor& x, Cache& cache, bool training) {
    check(x.ndim() == 3 && x.dim(2) == channels_,
          "se_block: expected HxWx" + std::to_string(channels_) + " input, got " + x.shape_str());
    cache.valid = true;
    cache.input = x;
    Tensor pooled = pool_.forward(x, cache.c_pool, training);
    Tensor z1 = fc1.forward(pooled, cache.c_fc1, training);
    Tensor h = relu_.forward(z1, cache.c_relu, training);
    Tensor z2 = fc2.forward(h, cache.c_fc2, training);
    cache.scales = sig_.forward(z2, cache.c_sig, training);
    return scale_.forward2(x, cache.scales, cache.c_scale, training);
}

Tensor SEBlock::backward(const Cache& cache, const Tensor& grad_out, GradStore* sink) const {
    check(cache.valid, "se_block: backward without cached forward activations");
    auto [gx_direct, gscales] = scale_.backward2(cache.c_scale, grad_out, sink);
    Tensor gz2 = sig_.backward(cache.c_sig, gscales, sink);
    Tensor gh = fc2.backward(cache.c_fc2, gz2, sink);
    Tensor gz1 = relu_.backward(cache.c_relu, gh, sink);
    Tensor gpooled = fc1.backward(cache.c_fc1, gz1, sink);
    Tensor gx_pool = pool_.backward(cache.c_pool, gpooled, sink);
    gx_direct.add_(gx_pool);
    return gx_direct;
}

void SEBlock::register_params(ParamStore& store) {
    store.register_layer(fc1);
    store.register_layer(fc2);
}

void SEBlock::init_weights(Rng& rng) {
    fc1.init_weights(rng);
    fc2.init_weights(rng);
}

ConvNeXtBlock::ConvNeXtBlock(std::string name, int channels) : channels_(channels) {
    kernels::ConvSpec dws;
    dws.kh = dws.kw = 7;
    dws.py = dws.px = 3;
    dws.cin = dws.cout = channels;
    dws.groups = channels;
    dw = Layer::conv2d(name + ".dw", dws);
    ln = Layer::layernorm(name + ".ln", channels);
    kernels::ConvSpec p1;
    p1.cin = channels;
    p1.cout = 4 * channels;
    pw1 = Layer::conv2d(name + ".pw1", p1);
    kernels::ConvSpec p2;
    p2.cin = 4 * channels;
    p2.cout = channels;
    pw2 = Layer::conv2d(name + ".pw2", p2);
    gelu_ = Layer::gelu();
}

Tensor ConvNeXtBlock::forward(const Tensor& x, Cache& cache, bool training) {
    check(x.ndim() == 3 && x.dim(2) == channels_,
          "convnext_block: expected HxWx" + std::to_string(channels_) + " input, got " +
              x.shape_str());
    check(x.dim(0) >= 1 && x.dim(1) >= 1, "convnext_block: empty spatial extent");
    cache.valid = true;
    cache.input = x;
    Tensor t = dw.forward(x, cache.c_dw, training);
    t = ln.forward(t, cache.c_ln, training);
    t = pw1.forward(t, cache.c_pw1, training);
    t = gelu_.forward(t, cache.c_gelu, training);
    t = pw2.forward(t, cache.c_pw2, training);
    t.add_(x);
    return t;
}

Tensor ConvNeXtBlock::backward(const Cache& cache, const Tensor& grad_out, GradStore* sink) const {
    check(cache.valid, "convnext_block: backward without cached forward activations");
    Tensor g = pw2.backward(cache.c_pw2, grad_out, sink);
    g = gelu_.backward(cache.c_gelu, g, sink);
    g = pw1.backward(cache.c_pw1, g, sink);
    g = ln.backward(cache.c_ln, g, sink);
    g = dw.backward(cache.c_dw, g, sink);
    g.add_(grad_out);  // residual path
    return g;
}

void ConvNeXtBlock::register_params(ParamStore& store) {
    store.register_layer(dw);
    store.register_layer(ln);
    store.register_layer(pw1);
    store.register_layer(pw2);
}

void ConvNeXtBlock::init_weights(Rng& rng) {
    dw.init_weights(rng);
    pw1.init_weights(rng);
    pw2.init_weights(rng);
}

namespace {
SEBlock::Cache g_se_cache;
ConvNeXtBlock::Cache g_cnx_cache;
}  // namespace

Tensor se_block(SEBlock& block, const Tensor& input) {
    return block.forward(input, g_se_cache, true);
}

Tensor convnext_block(ConvNeXtBlock& block, const Tensor& input) {
    return block.forward(input, g_cnx_cache, true);
}

}  // namespace cmsc
