#include "cmsc/nn.hpp"

#include <cmath>
#include <cstring>

namespace cmsc {

const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::Conv2d: return "conv2d";
        case LayerKind::Deconv2d: return "deconv2d";
        case LayerKind::Dense: return "dense";
        case LayerKind::BatchNorm: return "batchnorm";
        case LayerKind::ReLU: return "relu";
        case LayerKind::GELU: return "gelu";
        case LayerKind::Sigmoid: return "sigmoid";
        case LayerKind::GlobalAvgPool: return "global-avg-pool";
        case LayerKind::LayerNorm: return "layernorm";
        case LayerKind::ResidualAdd: return "residual-add";
        case LayerKind::ChannelScale: return "channel-scale";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// GradStore
// ---------------------------------------------------------------------------

void GradStore::add(const std::string& name, const Tensor& g) {
    auto it = grads_.find(name);
    if (it == grads_.end()) {
        grads_[name] = items_.size();
        items_.emplace_back(name, g);
    } else {
        items_[it->second].second.add_(g);
    }
}

const Tensor* GradStore::find(const std::string& name) const {
    auto it = grads_.find(name);
    return it == grads_.end() ? nullptr : &items_[it->second].second;
}

void GradStore::clear() {
    grads_.clear();
    items_.clear();
}

void GradStore::scale(double s) {
    for (auto& [_, g] : items_) g.scale_(s);
}

void GradStore::merge(const GradStore& other) {
    for (const auto& [name, g] : other.items_) add(name, g);
}

// ---------------------------------------------------------------------------
// Layer factories
// ---------------------------------------------------------------------------

Layer Layer::conv2d(std::string name, const kernels::ConvSpec& spec) {
    Layer l;
    l.kind = LayerKind::Conv2d;
    l.name = std::move(name);
    l.conv = spec;
    l.params = {Tensor({spec.kh, spec.kw, spec.cin_g(), spec.cout}), Tensor({spec.cout})};
    return l;
}

Layer Layer::deconv2d(std::string name, const kernels::ConvSpec& spec) {
    Layer l = conv2d(std::move(name), spec);
    l.kind = LayerKind::Deconv2d;
    return l;
}

Layer Layer::dense(std::string name, int in, int out) {
    Layer l;
    l.kind = LayerKind::Dense;
    l.name = std::move(name);
    l.features_in = in;
    l.features_out = out;
    l.params = {Tensor({out, in}), Tensor({out})};
    return l;
}

Layer Layer::batchnorm(std::string name, int channels) {
    Layer l;
    l.kind = LayerKind::BatchNorm;
    l.name = std::move(name);
    l.channels = channels;
    l.params = {Tensor({channels}, 1.0), Tensor({channels}, 0.0)};
    l.buffers = {Tensor({channels}, 0.0), Tensor({channels}, 1.0)};
    return l;
}

Layer Layer::layernorm(std::string name, int channels) {
    Layer l;
    l.kind = LayerKind::LayerNorm;
    l.name = std::move(name);
    l.channels = channels;
    l.params = {Tensor({channels}, 1.0), Tensor({channels}, 0.0)};
    return l;
}

Layer Layer::relu() {
    Layer l;
    l.kind = LayerKind::ReLU;
    return l;
}
Layer Layer::gelu() {
    Layer l;
    l.kind = LayerKind::GELU;
    return l;
}
Layer Layer::sigmoid() {
    Layer l;
    l.kind = LayerKind::Sigmoid;
    return l;
}
Layer Layer::global_avg_pool() {
    Layer l;
    l.kind = LayerKind::GlobalAvgPool;
    return l;
}
Layer Layer::residual_add() {
    Layer l;
    l.kind = LayerKind::ResidualAdd;
    return l;
}
Layer Layer::channel_scale(std::string name, int channels) {
    Layer l;
    l.kind = LayerKind::ChannelScale;
    l.name = std::move(name);
    l.channels = channels;
    return l;
}

std::vector<std::string> Layer::param_names() const {
    switch (kind) {
        case LayerKind::Conv2d:
        case LayerKind::Deconv2d:
        case LayerKind::Dense:
            return {name + ".w", name + ".b"};
        case LayerKind::BatchNorm:
        case LayerKind::LayerNorm:
            return {name + ".gamma", name + ".beta"};
        default:
            return {};
    }
}

std::vector<std::string> Layer::buffer_names() const {
    if (kind == LayerKind::BatchNorm)
        return {name + ".running_mean", name + ".running_var"};
    return {};
}

void Layer::apply_deferred_updates(const LayerCache& cache) {
    if (kind != LayerKind::BatchNorm) return;
    check(cache.valid && cache.training && cache.aux2.ndim() == 2 && cache.aux2.dim(0) == 3,
          "apply_deferred_updates: cache has no recorded batch statistics");
    for (int c = 0; c < channels; ++c) {
        buffers[0][c] = (1.0 - momentum) * buffers[0][c] + momentum * cache.aux2.at(0, c);
        buffers[1][c] = (1.0 - momentum) * buffers[1][c] + momentum * cache.aux2.at(2, c);
    }
}

void Layer::init_weights(Rng& rng) {
    int fan_in = 0;
    switch (kind) {
        case LayerKind::Conv2d:
        case LayerKind::Deconv2d:
            fan_in = conv.kh * conv.kw * conv.cin_g();
            break;
        case LayerKind::Dense:
            fan_in = features_in;
            break;
        default:
            return;  // norms keep gamma=1/beta=0
    }
    const double limit = std::sqrt(6.0 / fan_in);
    for (double& v : params[0].data) v = rng.uniform(-limit, limit);
    params[1].fill(0.0);
}

// ---------------------------------------------------------------------------
// Forward
// ---------------------------------------------------------------------------

static void require_hwc(const Layer& l, const Tensor& x, int want_c) {
    check(x.ndim() == 3 && x.dim(2) == want_c,
          std::string(layer_kind_name(l.kind)) + " '" + l.name + "': expected HxWx" +
              std::to_string(want_c) + " input, got " + x.shape_str());
}

Tensor Layer::forward(const Tensor& x, LayerCache& cache, bool training) {
    cache.valid = true;
    cache.training = training;
    cache.input = x;
    switch (kind) {
        case LayerKind::Conv2d: {
            require_hwc(*this, x, conv.cin);
            const int H = x.dim(0), W = x.dim(1);
            check(conv.out_h(H) > 0 && conv.out_w(W) > 0,
                  "conv2d '" + name + "': input " + x.shape_str() + " too small for kernel");
            Tensor y({conv.out_h(H), conv.out_w(W), conv.cout});
            kernels::conv2d_forward(x.data.data(), H, W, conv, params[0].data.data(),
                                    params[1].data.data(), y.data.data());
            return y;
        }
        case LayerKind::Deconv2d: {
            require_hwc(*this, x, conv.cin);
            const int H = x.dim(0), W = x.dim(1);
            Tensor y({conv.deconv_out_h(H), conv.deconv_out_w(W), conv.cout});
            kernels::deconv2d_forward(x.data.data(), H, W, conv, params[0].data.data(),
                                      params[1].data.data(), y.data.data());
            return y;
        }
        case LayerKind::Dense: {
            check(x.ndim() == 1 && x.dim(0) == features_in,
                  "dense '" + name + "': expected [" + std::to_string(features_in) +
                      "] input, got " + x.shape_str());
            Tensor y({features_out});
            const Tensor& w = params[0];
            for (int o = 0; o < features_out; ++o) {
                double acc = params[1][o];
                for (int i = 0; i < features_in; ++i)
                    acc += w.data[static_cast<size_t>(o) * features_in + i] * x[i];
                y[o] = acc;
            }
            return y;
        }
        case LayerKind::BatchNorm: {
            check(x.ndim() >= 1 && x.dim(x.ndim() - 1) == channels,
                  "batchnorm '" + name + "': trailing dim must be " + std::to_string(channels) +
                      ", got " + x.shape_str());
            const long long n = x.numel() / channels;
            Tensor y(x.shape);
            cache.aux = Tensor(x.shape);                  // xhat
            cache.aux2 = Tensor({3, channels});           // mean, invstd, var
            const double* gamma = params[0].data.data();
            const double* beta = params[1].data.data();
            for (int c = 0; c < channels; ++c) {
                double mean, var;
                if (training) {
                    double s = 0.0;
                    for (long long i = 0; i < n; ++i) s += x.data[i * channels + c];
                    mean = s / n;
                    double sq = 0.0;
                    for (long long i = 0; i < n; ++i) {
                        const double d = x.data[i * channels + c] - mean;
                        sq += d * d;
                    }
                    var = sq / n;
                    if (!defer_buffer_updates) {
                        buffers[0][c] = (1.0 - momentum) * buffers[0][c] + momentum * mean;
                        buffers[1][c] = (1.0 - momentum) * buffers[1][c] + momentum * var;
                    }
                } else {
                    mean = buffers[0][c];
                    var = buffers[1][c];
                }
                const double invstd = 1.0 / std::sqrt(var + eps);
                cache.aux2.at(0, c) = mean;
                cache.aux2.at(1, c) = invstd;
                cache.aux2.at(2, c) = var;
                for (long long i = 0; i < n; ++i) {
                    const double xh = (x.data[i * channels + c] - mean) * invstd;
                    cache.aux.data[i * channels + c] = xh;
                    y.data[i * channels + c] = gamma[c] * xh + beta[c];
                }
            }
            return y;
        }
        case LayerKind::LayerNorm: {
            check(x.ndim() >= 1 && x.dim(x.ndim() - 1) == channels,
                  "layernorm '" + name + "': trailing dim must be " + std::to_string(channels) +
                      ", got " + x.shape_str());
            const long long n = x.numel() / channels;
            Tensor y(x.shape);
            cache.aux = Tensor(x.shape);        // xhat
            cache.aux2 = Tensor({(int)n});      // invstd per position
            const double* gamma = params[0].data.data();
            const double* beta = params[1].data.data();
            for (long long i = 0; i < n; ++i) {
                const double* xi = x.data.data() + i * channels;
                double mean = 0.0;
                for (int c = 0; c < channels; ++c) mean += xi[c];
                mean /= channels;
                double var = 0.0;
                for (int c = 0; c < channels; ++c) var += (xi[c] - mean) * (xi[c] - mean);
                var /= channels;
                const double invstd = 1.0 / std::sqrt(var + eps);
                cache.aux2[i] = invstd;
                for (int c = 0; c < channels; ++c) {
                    const double xh = (xi[c] - mean) * invstd;
                    cache.aux.data[i * channels + c] = xh;
                    y.data[i * channels + c] = gamma[c] * xh + beta[c];
                }
            }
            return y;
        }
        case LayerKind::ReLU: {
            Tensor y(x.shape);
            for (size_t i = 0; i < x.data.size(); ++i) y.data[i] = x.data[i] > 0.0 ? x.data[i] : 0.0;
            return y;
        }
        case LayerKind::GELU: {
            Tensor y(x.shape);
            cache.aux = Tensor(x.shape);  // Gaussian CDF, reused in backward
            for (size_t i = 0; i < x.data.size(); ++i) {
                const double v = x.data[i];
                const double cdf = 0.5 * (1.0 + std::erf(v * M_SQRT1_2));
                cache.aux.data[i] = cdf;
                y.data[i] = v * cdf;
            }
            return y;
        }
        case LayerKind::Sigmoid: {
            Tensor y(x.shape);
            for (size_t i = 0; i < x.data.size(); ++i) y.data[i] = 1.0 / (1.0 + std::exp(-x.data[i]));
            cache.aux = y;
            return y;
        }
        case LayerKind::GlobalAvgPool: {
            check(x.ndim() == 3, "global-avg-pool: expected HxWxC input, got " + x.shape_str());
            const int C = x.dim(2);
            const long long hw = static_cast<long long>(x.dim(0)) * x.dim(1);
            Tensor y({C});
            for (long long i = 0; i < hw; ++i)
                for (int c = 0; c < C; ++c) y[c] += x.data[i * C + c];
            for (int c = 0; c < C; ++c) y[c] /= static_cast<double>(hw);
            return y;
        }
        case LayerKind::ResidualAdd:
        case LayerKind::ChannelScale:
            contract_fail(std::string(layer_kind_name(kind)) + " takes two inputs; use forward2");
    }
    contract_fail("unhandled layer kind");
}

Tensor Layer::forward2(const Tensor& a, const Tensor& b, LayerCache& cache, bool training) {
    cache.valid = true;
    cache.training = training;
    cache.input = a;
    cache.input2 = b;
    switch (kind) {
        case LayerKind::ResidualAdd: {
            check(a.same_shape(b), "residual-add: shape mismatch " + a.shape_str() + " vs " +
                                       b.shape_str());
            Tensor y = a;
            y.add_(b);
            return y;
        }
        case LayerKind::ChannelScale: {
            const int C = a.dim(a.ndim() - 1);
            check(b.ndim() == 1 && b.dim(0) == C,
                  "channel-scale '" + name + "': scale must be [" + std::to_string(C) +
                      "], got " + b.shape_str());
            Tensor y(a.shape);
            const long long n = a.numel() / C;
            for (long long i = 0; i < n; ++i)
                for (int c = 0; c < C; ++c) y.data[i * C + c] = a.data[i * C + c] * b[c];
            return y;
        }
        default:
            contract_fail(std::string(layer_kind_name(kind)) + " takes one input; use forward");
    }
}

// ---------------------------------------------------------------------------
// Backward
// ---------------------------------------------------------------------------

Tensor Layer::backward(const LayerCache& cache, const Tensor& grad_out, GradStore* sink) const {
    check(cache.valid, std::string(layer_kind_name(kind)) + " '" + name +
                           "': backward without cached forward activations");
    const Tensor& x = cache.input;
    switch (kind) {
        case LayerKind::Conv2d: {
            const int H = x.dim(0), W = x.dim(1);
            check(grad_out.ndim() == 3 && grad_out.dim(0) == conv.out_h(H) &&
                      grad_out.dim(1) == conv.out_w(W) && grad_out.dim(2) == conv.cout,
                  "conv2d '" + name + "': grad_out shape " + grad_out.shape_str() +
                      " inconsistent with cached input " + x.shape_str());
            Tensor gin(x.shape);
            kernels::conv2d_backward_input(grad_out.data.data(), H, W, conv,
                                           params[0].data.data(), gin.data.data());
            if (sink) {
                Tensor gw(params[0].shape), gb(params[1].shape);
                kernels::conv2d_backward_params(grad_out.data.data(), x.data.data(), H, W, conv,
                                                gw.data.data(), gb.data.data());
                sink->add(name + ".w", gw);
                sink->add(name + ".b", gb);
            }
            return gin;
        }
        case LayerKind::Deconv2d: {
            const int H = x.dim(0), W = x.dim(1);
            Tensor gin(x.shape);
            kernels::deconv2d_backward_input(grad_out.data.data(), H, W, conv,
                                             params[0].data.data(), gin.data.data());
            if (sink) {
                Tensor gw(params[0].shape), gb(params[1].shape);
                kernels::deconv2d_backward_params(grad_out.data.data(), x.data.data(), H, W, conv,
                                                  gw.data.data(), gb.data.data());
                sink->add(name + ".w", gw);
                sink->add(name + ".b", gb);
            }
            return gin;
        }
        case LayerKind::Dense: {
            Tensor gin({features_in});
            const Tensor& w = params[0];
            for (int i = 0; i < features_in; ++i) {
                double acc = 0.0;
                for (int o = 0; o < features_out; ++o)
                    acc += grad_out[o] * w.data[static_cast<size_t>(o) * features_in + i];
                gin[i] = acc;
            }
            if (sink) {
                Tensor gw(w.shape), gb({features_out});
                for (int o = 0; o < features_out; ++o) {
                    for (int i = 0; i < features_in; ++i)
                        gw.data[static_cast<size_t>(o) * features_in + i] = grad_out[o] * x[i];
                    gb[o] = grad_out[o];
                }
                sink->add(name + ".w", gw);
                sink->add(name + ".b", gb);
            }
            return gin;
        }
        case LayerKind::BatchNorm: {
            const long long n = x.numel() / channels;
            Tensor gin(x.shape);
            const double* gamma = params[0].data.data();
            Tensor gg({channels}), gb({channels});
            for (int c = 0; c < channels; ++c) {
                const double invstd = cache.aux2.at(1, c);
                double sum_g = 0.0, sum_gx = 0.0;
                for (long long i = 0; i < n; ++i) {
                    const double g = grad_out.data[i * channels + c];
                    sum_g += g;
                    sum_gx += g * cache.aux.data[i * channels + c];
                }
                gg[c] = sum_gx;
                gb[c] = sum_g;
                if (cache.training) {
                    const double mg = sum_g / n, mgx = sum_gx / n;
                    for (long long i = 0; i < n; ++i) {
                        const double g = grad_out.data[i * channels + c];
                        const double xh = cache.aux.data[i * channels + c];
                        gin.data[i * channels + c] = gamma[c] * invstd * (g - mg - xh * mgx);
                    }
                } else {
                    for (long long i = 0; i < n; ++i)
                        gin.data[i * channels + c] =
                            grad_out.data[i * channels + c] * gamma[c] * invstd;
                }
            }
            if (sink) {
                sink->add(name + ".gamma", gg);
                sink->add(name + ".beta", gb);
            }
            return gin;
        }
        case LayerKind::LayerNorm: {
            const long long n = x.numel() / channels;
            Tensor gin(x.shape);
            const double* gamma = params[0].data.data();
            Tensor gg({channels}), gb({channels});
            for (long long i = 0; i < n; ++i) {
                const double invstd = cache.aux2[i];
                double m1 = 0.0, m2 = 0.0;
                for (int c = 0; c < channels; ++c) {
                    const double gg_ = grad_out.data[i * channels + c] * gamma[c];
                    m1 += gg_;
                    m2 += gg_ * cache.aux.data[i * channels + c];
                }
                m1 /= channels;
                m2 /= channels;
                for (int c = 0; c < channels; ++c) {
                    const double g = grad_out.data[i * channels + c];
                    const double xh = cache.aux.data[i * channels + c];
                    gin.data[i * channels + c] = invstd * (g * gamma[c] - m1 - xh * m2);
                    gg[c] += g * xh;
                    gb[c] += g;
                }
            }
            if (sink) {
                sink->add(name + ".gamma", gg);
                sink->add(name + ".beta", gb);
            }
            return gin;
        }
        case LayerKind::ReLU: {
            Tensor gin(x.shape);
            for (size_t i = 0; i < x.data.size(); ++i)
                gin.data[i] = x.data[i] > 0.0 ? grad_out.data[i] : 0.0;
            return gin;
        }
        case LayerKind::GELU: {
            Tensor gin(x.shape);
            const double inv_sqrt2pi = 1.0 / std::sqrt(2.0 * M_PI);
            for (size_t i = 0; i < x.data.size(); ++i) {
                const double v = x.data[i];
                const double pdf = std::exp(-0.5 * v * v) * inv_sqrt2pi;
                gin.data[i] = grad_out.data[i] * (cache.aux.data[i] + v * pdf);
            }
            return gin;
        }
        case LayerKind::Sigmoid: {
            Tensor gin(x.shape);
            for (size_t i = 0; i < x.data.size(); ++i) {
                const double y = cache.aux.data[i];
                gin.data[i] = grad_out.data[i] * y * (1.0 - y);
            }
            return gin;
        }
        case LayerKind::GlobalAvgPool: {
            const int C = x.dim(2);
            const long long hw = static_cast<long long>(x.dim(0)) * x.dim(1);
            Tensor gin(x.shape);
            for (long long i = 0; i < hw; ++i)
                for (int c = 0; c < C; ++c) gin.data[i * C + c] = grad_out[c] / static_cast<double>(hw);
            return gin;
        }
        case LayerKind::ResidualAdd:
        case LayerKind::ChannelScale:
            contract_fail(std::string(layer_kind_name(kind)) + " has two inputs; use backward2");
    }
    contract_fail("unhandled layer kind");
}

std::pair<Tensor, Tensor> Layer::backward2(const LayerCache& cache, const Tensor& grad_out,
                                           GradStore* sink) const {
    (void)sink;
    check(cache.valid, "backward2 without cached forward activations");
    switch (kind) {
        case LayerKind::ResidualAdd:
            return {grad_out, grad_out};
        case LayerKind::ChannelScale: {
            const Tensor& a = cache.input;
            const Tensor& s = cache.input2;
            const int C = a.dim(a.ndim() - 1);
            const long long n = a.numel() / C;
            Tensor ga(a.shape), gs({C});
            for (long long i = 0; i < n; ++i)
                for (int c = 0; c < C; ++c) {
                    ga.data[i * C + c] = grad_out.data[i * C + c] * s[c];
                    gs[c] += grad_out.data[i * C + c] * a.data[i * C + c];
                }
            return {ga, gs};
        }
        default:
            contract_fail(std::string(layer_kind_name(kind)) + " has one input; use backward");
    }
}

Tensor forward(Layer& layer, const Tensor& input) {
    return layer.forward(input, layer.last_cache, true);
}

std::pair<Tensor, GradStore> backward(Layer& layer, const Tensor& input, const Tensor& grad_output) {
    check(layer.last_cache.valid, "backward: no cached forward activations for layer '" +
                                      layer.name + "'");
    check(layer.last_cache.input.same_shape(input) && layer.last_cache.input.data == input.data,
          "backward: input does not match the cached forward input");
    GradStore sink;
    Tensor gin = layer.backward(layer.last_cache, grad_output, &sink);
    return {std::move(gin), std::move(sink)};
}

// ---------------------------------------------------------------------------
// ParamStore
// ---------------------------------------------------------------------------

void ParamStore::add(const std::string& name, Tensor* value, bool buffer) {
    check(!index_.count(name), "ParamStore: duplicate parameter '" + name + "'");
    Entry e;
    e.name = name;
    e.value = value;
    e.m = Tensor(value->shape);
    e.v = Tensor(value->shape);
    e.buffer = buffer;
    index_[name] = entries_.size();
    entries_.push_back(std::move(e));
}

void ParamStore::register_layer(Layer& layer) {
    const auto pnames = layer.param_names();
    for (size_t i = 0; i < pnames.size(); ++i) add(pnames[i], &layer.params[i], false);
    const auto bnames = layer.buffer_names();
    for (size_t i = 0; i < bnames.size(); ++i) add(bnames[i], &layer.buffers[i], true);
}

Tensor* ParamStore::value(const std::string& name) {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : entries_[it->second].value;
}
const Tensor* ParamStore::value(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : entries_[it->second].value;
}

void ParamStore::set_frozen_prefix(const std::string& prefix, bool frozen) {
    bool hit = false;
    for (auto& e : entries_) {
        if (e.name.rfind(prefix, 0) == 0) {
            e.frozen = frozen;
            hit = true;
        }
    }
    check(hit, "ParamStore: no parameter matches prefix '" + prefix + "'");
}

void ParamStore::set_all_frozen(bool frozen) {
    for (auto& e : entries_) e.frozen = frozen;
}

bool ParamStore::is_frozen(const std::string& name) const {
    auto it = index_.find(name);
    check(it != index_.end(), "ParamStore: unknown parameter '" + name + "'");
    return entries_[it->second].frozen;
}

void ParamStore::adam_step(const GradStore& grads, double lr, const AdamConfig& cfg) {
    for (const auto& [name, g] : grads.items()) {
        auto it = index_.find(name);
        check(it != index_.end(), "adam_step: gradient key '" + name + "' absent from store");
        Entry& e = entries_[it->second];
        check(!e.buffer, "adam_step: gradient provided for buffer '" + name + "'");
        if (e.frozen) continue;
        check(g.same_shape(*e.value), "adam_step: gradient shape mismatch for '" + name + "'");
        e.step += 1;
        const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(e.step));
        const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(e.step));
        for (size_t i = 0; i < g.data.size(); ++i) {
            const double gi = g.data[i];
            e.m.data[i] = cfg.beta1 * e.m.data[i] + (1.0 - cfg.beta1) * gi;
            e.v.data[i] = cfg.beta2 * e.v.data[i] + (1.0 - cfg.beta2) * gi * gi;
            const double mhat = e.m.data[i] / bc1;
            const double vhat = e.v.data[i] / bc2;
            e.value->data[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

uint64_t ParamStore::fingerprint(const std::string& prefix) const {
    uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](const void* p, size_t n) {
        const unsigned char* b = static_cast<const unsigned char*>(p);
        for (size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 0x100000001b3ULL;
        }
    };
    for (const auto& e : entries_) {
        if (!prefix.empty() && e.name.rfind(prefix, 0) != 0) continue;
        mix(e.name.data(), e.name.size());
        mix(e.value->data.data(), e.value->data.size() * sizeof(double));
    }
    return h;
}

}  // namespace cmsc
