#include <doctest.h>

#include "cmsc/blocks.hpp"
#include "cmsc/jscc.hpp"
#include "cmsc/nn.hpp"
#include "test_util.hpp"

using namespace cmsc;
using test::fd_gradient;
using test::max_rel_error;
using test::random_tensor;
using test::weighted_sum;

namespace {

// Checks d(weighted_sum(layer(x)))/dx and /dparams against central
// differences on a random probe.
void check_layer_gradients(Layer& layer, Tensor x, Rng& rng, bool training = true) {
    LayerCache cache;
    Tensor y0 = layer.forward(x, cache, training);
    Tensor probe = random_tensor(y0.shape, rng);

    GradStore sink;
    Tensor gin = layer.backward(cache, probe, &sink);

    auto loss = [&] {
        LayerCache c;
        return weighted_sum(layer.forward(x, c, training), probe);
    };
    Tensor fd_in = fd_gradient(x, loss);
    INFO("layer " << layer_kind_name(layer.kind) << " input grad");
    CHECK(max_rel_error(gin, fd_in) < 1e-4);

    const auto names = layer.param_names();
    for (size_t p = 0; p < names.size(); ++p) {
        Tensor fd_p = fd_gradient(layer.params[p], loss);
        const Tensor* gp = sink.find(names[p]);
        REQUIRE(gp != nullptr);
        INFO("layer " << layer_kind_name(layer.kind) << " param " << names[p]);
        CHECK(max_rel_error(*gp, fd_p) < 1e-4);
    }
}

}  // namespace

TEST_CASE("relu forward and subgradient convention") {
    Layer relu = Layer::relu();
    LayerCache c;
    Tensor x = Tensor::from({3}, {-1, 0, 2});
    Tensor y = relu.forward(x, c, true);
    CHECK(y.data == std::vector<double>{0, 0, 2});
    Tensor g = relu.backward(c, Tensor::from({3}, {1, 1, 1}), nullptr);
    CHECK(g.data == std::vector<double>{0, 0, 1});  // grad 0 at x <= 0
}

TEST_CASE("1x1 identity conv preserves the map") {
    kernels::ConvSpec s;
    s.cin = s.cout = 1;
    Layer conv = Layer::conv2d("id", s);
    conv.params[0].data[0] = 1.0;
    Rng rng(5);
    Tensor x = random_tensor({4, 5, 1}, rng);
    LayerCache c;
    Tensor y = conv.forward(x, c, true);
    CHECK(y.data == x.data);
}

TEST_CASE("every layer kind passes finite-difference gradient checks") {
    Rng rng(2024);

    SUBCASE("conv2d") {
        kernels::ConvSpec s;
        s.kh = s.kw = 3;
        s.py = s.px = 1;
        s.cin = 4;
        s.cout = 4;
        Layer l = Layer::conv2d("c", s);
        l.init_weights(rng);
        check_layer_gradients(l, random_tensor({6, 6, 4}, rng), rng);
    }
    SUBCASE("conv2d depthwise strided") {
        kernels::ConvSpec s;
        s.kh = s.kw = 3;
        s.py = s.px = 1;
        s.sy = s.sx = 2;
        s.cin = s.cout = 4;
        s.groups = 4;
        Layer l = Layer::conv2d("cd", s);
        l.init_weights(rng);
        check_layer_gradients(l, random_tensor({5, 5, 4}, rng), rng);
    }
    SUBCASE("deconv2d") {
        kernels::ConvSpec s;
        s.kh = 3;
        s.kw = 1;
        s.py = 1;
        s.cin = 4;
        s.cout = 3;
        Layer l = Layer::deconv2d("d", s);
        l.init_weights(rng);
        check_layer_gradients(l, random_tensor({6, 1, 4}, rng), rng);
    }
    SUBCASE("deconv2d strided") {
        kernels::ConvSpec s;
        s.kh = s.kw = 3;
        s.sy = s.sx = 2;
        s.cin = 3;
        s.cout = 2;
        Layer l = Layer::deconv2d("ds", s);
        l.init_weights(rng);
        check_layer_gradients(l, random_tensor({4, 4, 3}, rng), rng);
    }
    SUBCASE("dense") {
        Layer l = Layer::dense("fc", 6, 4);
        l.init_weights(rng);
        check_layer_gradients(l, random_tensor({6}, rng), rng);
    }
    SUBCASE("batchnorm training") {
        Layer l = Layer::batchnorm("bn", 4);
        for (double& v : l.params[0].data) v = 0.5 + rng.uniform();
        for (double& v : l.params[1].data) v = rng.gaussian();
        check_layer_gradients(l, random_tensor({5, 3, 4}, rng), rng, true);
    }
    SUBCASE("batchnorm eval") {
        Layer l = Layer::batchnorm("bn", 4);
        for (double& v : l.buffers[0].data) v = rng.gaussian();
        for (double& v : l.buffers[1].data) v = 0.5 + rng.uniform();
        check_layer_gradients(l, random_tensor({5, 3, 4}, rng), rng, false);
    }
    SUBCASE("layernorm") {
        Layer l = Layer::layernorm("ln", 4);
        for (double& v : l.params[0].data) v = 0.5 + rng.uniform();
        for (double& v : l.params[1].data) v = rng.gaussian();
        check_layer_gradients(l, random_tensor({4, 4, 4}, rng), rng);
    }
    SUBCASE("relu") {
        Layer l = Layer::relu();
        check_layer_gradients(l, random_tensor({6, 6, 2}, rng), rng);
    }
    SUBCASE("gelu") {
        Layer l = Layer::gelu();
        check_layer_gradients(l, random_tensor({5, 5, 3}, rng), rng);
    }
    SUBCASE("sigmoid") {
        Layer l = Layer::sigmoid();
        check_layer_gradients(l, random_tensor({4, 4, 2}, rng), rng);
    }
    SUBCASE("global-avg-pool") {
        Layer l = Layer::global_avg_pool();
        check_layer_gradients(l, random_tensor({6, 5, 4}, rng), rng);
    }
    SUBCASE("residual-add and channel-scale") {
        Layer add = Layer::residual_add();
        Layer scale = Layer::channel_scale("cs", 3);
        Tensor a = random_tensor({4, 4, 3}, rng);
        Tensor b = random_tensor({4, 4, 3}, rng);
        Tensor s = random_tensor({3}, rng);
        LayerCache ca, cs;
        Tensor ya = add.forward2(a, b, ca, true);
        Tensor ys = scale.forward2(a, s, cs, true);
        Tensor probe = random_tensor({4, 4, 3}, rng);
        auto [ga1, ga2] = add.backward2(ca, probe, nullptr);
        auto [gs1, gs2] = scale.backward2(cs, probe, nullptr);

        auto loss_add = [&] {
            LayerCache c;
            return weighted_sum(add.forward2(a, b, c, true), probe);
        };
        auto loss_scale = [&] {
            LayerCache c;
            return weighted_sum(scale.forward2(a, s, c, true), probe);
        };
        CHECK(max_rel_error(ga1, fd_gradient(a, loss_add)) < 1e-4);
        CHECK(max_rel_error(ga2, fd_gradient(b, loss_add)) < 1e-4);
        CHECK(max_rel_error(gs1, fd_gradient(a, loss_scale)) < 1e-4);
        CHECK(max_rel_error(gs2, fd_gradient(s, loss_scale)) < 1e-4);
    }
}

TEST_CASE("se_block semantics and gradients") {
    Rng rng(99);

    SUBCASE("channels not divisible by reduction is a contract error") {
        CHECK_THROWS_AS(SEBlock("se", 6, 4), ContractError);
    }
    SUBCASE("saturated gates pass the input through") {
        SEBlock se("se", 8, 4);
        se.init_weights(rng);
        se.fc2.params[0].fill(0.0);
        se.fc2.params[1].fill(100.0);  // sigmoid(100) == 1.0 in double
        Tensor x = random_tensor({4, 4, 8}, rng);
        SEBlock::Cache c;
        Tensor y = se.forward(x, c, true);
        for (size_t i = 0; i < x.data.size(); ++i)
            CHECK(y.data[i] == doctest::Approx(x.data[i]).epsilon(1e-6));
    }
    SUBCASE("zero input stays zero") {
        SEBlock se("se", 8, 4);
        se.init_weights(rng);
        Tensor x({3, 3, 8});
        SEBlock::Cache c;
        Tensor y = se.forward(x, c, true);
        for (double v : y.data) CHECK(v == 0.0);
    }
    SUBCASE("matches an explicit pool-MLP-scale oracle") {
        SEBlock se("se", 8, 4);
        se.init_weights(rng);
        Tensor x = random_tensor({4, 4, 8}, rng);
        SEBlock::Cache c;
        Tensor y = se.forward(x, c, true);
        // oracle
        std::vector<double> pooled(8, 0.0);
        for (int i = 0; i < 16; ++i)
            for (int ch = 0; ch < 8; ++ch) pooled[ch] += x.data[i * 8 + ch] / 16.0;
        std::vector<double> h(2, 0.0);
        for (int o = 0; o < 2; ++o) {
            double acc = se.fc1.params[1][o];
            for (int i = 0; i < 8; ++i) acc += se.fc1.params[0].data[o * 8 + i] * pooled[i];
            h[o] = std::max(acc, 0.0);
        }
        for (int ch = 0; ch < 8; ++ch) {
            double acc = se.fc2.params[1][ch];
            for (int i = 0; i < 2; ++i) acc += se.fc2.params[0].data[ch * 2 + i] * h[i];
            const double gate = 1.0 / (1.0 + std::exp(-acc));
            for (int i = 0; i < 16; ++i)
                CHECK(y.data[i * 8 + ch] ==
                      doctest::Approx(x.data[i * 8 + ch] * gate).epsilon(1e-9));
        }
    }
    SUBCASE("gradient check through the block") {
        SEBlock se("se", 4, 4);
        se.init_weights(rng);
        Tensor x = random_tensor({5, 4, 4}, rng);
        SEBlock::Cache c;
        Tensor y = se.forward(x, c, true);
        Tensor probe = random_tensor(y.shape, rng);
        GradStore sink;
        Tensor gin = se.backward(c, probe, &sink);
        auto loss = [&] {
            SEBlock::Cache cc;
            return weighted_sum(se.forward(x, cc, true), probe);
        };
        CHECK(max_rel_error(gin, fd_gradient(x, loss)) < 1e-4);
        for (const char* pname : {"se.fc1.w", "se.fc1.b", "se.fc2.w", "se.fc2.b"}) {
            Tensor* pv = nullptr;
            if (std::string(pname).find("fc1.w") != std::string::npos) pv = &se.fc1.params[0];
            else if (std::string(pname).find("fc1.b") != std::string::npos) pv = &se.fc1.params[1];
            else if (std::string(pname).find("fc2.w") != std::string::npos) pv = &se.fc2.params[0];
            else pv = &se.fc2.params[1];
            Tensor fd = fd_gradient(*pv, loss);
            CHECK(max_rel_error(*sink.find(pname), fd) < 1e-4);
        }
    }
}

TEST_CASE("convnext_block semantics and gradients") {
    Rng rng(4242);

    SUBCASE("zeroed projection weights make it the identity") {
        ConvNeXtBlock blk("cnx", 4);
        blk.init_weights(rng);
        blk.pw2.params[0].fill(0.0);
        blk.pw2.params[1].fill(0.0);
        Tensor x = random_tensor({6, 6, 4}, rng);
        ConvNeXtBlock::Cache c;
        Tensor y = blk.forward(x, c, true);
        CHECK(y.data == x.data);
    }
    SUBCASE("shape preservation") {
        ConvNeXtBlock blk("cnx", 4);
        blk.init_weights(rng);
        Tensor x = random_tensor({9, 8, 4}, rng);
        ConvNeXtBlock::Cache c;
        Tensor y = blk.forward(x, c, true);
        CHECK(y.shape == x.shape);
    }
    SUBCASE("gradient check") {
        ConvNeXtBlock blk("cnx", 4);
        blk.init_weights(rng);
        Tensor x = random_tensor({5, 5, 4}, rng);
        ConvNeXtBlock::Cache c;
        Tensor y = blk.forward(x, c, true);
        Tensor probe = random_tensor(y.shape, rng);
        GradStore sink;
        Tensor gin = blk.backward(c, probe, &sink);
        auto loss = [&] {
            ConvNeXtBlock::Cache cc;
            return weighted_sum(blk.forward(x, cc, true), probe);
        };
        CHECK(max_rel_error(gin, fd_gradient(x, loss)) < 1e-4);
        Tensor fd_dw = fd_gradient(blk.dw.params[0], loss);
        CHECK(max_rel_error(*sink.find("cnx.dw.w"), fd_dw) < 1e-4);
        Tensor fd_pw1 = fd_gradient(blk.pw1.params[0], loss);
        CHECK(max_rel_error(*sink.find("cnx.pw1.w"), fd_pw1) < 1e-4);
        Tensor fd_g = fd_gradient(blk.ln.params[0], loss);
        CHECK(max_rel_error(*sink.find("cnx.ln.gamma"), fd_g) < 1e-4);
    }
}

TEST_CASE("adam optimizer contract") {
    SUBCASE("first step on a scalar") {
        Layer l = Layer::dense("w", 1, 1);
        l.params[0].data[0] = 0.0;
        l.params[1].data[0] = 0.0;
        ParamStore store;
        store.register_layer(l);
        GradStore g;
        g.add("w.w", Tensor::from({1, 1}, {1.0}));
        store.adam_step(g, 0.1);
        CHECK(l.params[0].data[0] == doctest::Approx(-0.1 / (1.0 + 1e-8)).epsilon(1e-12));
    }
    SUBCASE("frozen parameter with nonzero gradient is untouched") {
        Layer l = Layer::dense("w", 2, 2);
        Rng rng(1);
        l.init_weights(rng);
        ParamStore store;
        store.register_layer(l);
        store.set_frozen_prefix("w.", true);
        const auto before = l.params[0].data;
        const uint64_t fp = store.fingerprint();
        GradStore g;
        g.add("w.w", Tensor::from({2, 2}, {1, 2, 3, 4}));
        for (int i = 0; i < 100; ++i) store.adam_step(g, 0.1);
        CHECK(l.params[0].data == before);
        CHECK(store.fingerprint() == fp);
    }
    SUBCASE("zero gradient leaves the parameter unchanged") {
        Layer l = Layer::dense("w", 1, 1);
        l.params[0].data[0] = 3.25;
        ParamStore store;
        store.register_layer(l);
        GradStore g;
        g.add("w.w", Tensor({1, 1}));
        store.adam_step(g, 0.1);
        CHECK(l.params[0].data[0] == 3.25);
    }
    SUBCASE("unknown gradient key is an error") {
        ParamStore store;
        GradStore g;
        g.add("nope", Tensor({1}));
        CHECK_THROWS_AS(store.adam_step(g, 0.1), ContractError);
    }
}

TEST_CASE("spec-style forward/backward entry points") {
    Rng rng(8);
    Layer l = Layer::dense("fc", 3, 2);
    l.init_weights(rng);
    Tensor x = random_tensor({3}, rng);
    Tensor y = forward(l, x);
    CHECK(y.dim(0) == 2);
    auto [gin, grads] = backward(l, x, Tensor::from({2}, {1.0, 1.0}));
    CHECK(gin.dim(0) == 3);
    CHECK(grads.find("fc.w") != nullptr);

    // backward without a forward is a usage error
    Layer fresh = Layer::dense("g", 3, 2);
    CHECK_THROWS_AS(backward(fresh, x, y), ContractError);
}

TEST_CASE("encoder-decoder composite gradient check (channel as identity)") {
    Rng rng(31);
    const int C = 4, K = 5;
    JsccEncoder enc("enc", C);
    JsccDecoder dec("dec", C);
    enc.init_weights(rng);
    dec.init_weights(rng);

    Tensor f = random_tensor({K, C}, rng);
    Tensor target = random_tensor({K, C}, rng);

    auto loss = [&] {
        JsccEncoder::Cache ce;
        JsccDecoder::Cache cd;
        SymbolBlock b = enc.forward(f, ce, true);
        Tensor out = dec.forward(b, cd, true);
        return mse(out, target);
    };

    JsccEncoder::Cache ce;
    JsccDecoder::Cache cd;
    SymbolBlock b = enc.forward(f, ce, true);
    Tensor out = dec.forward(b, cd, true);
    Tensor gout = mse_grad(out, target);
    GradStore sink;
    Tensor g_iq = dec.backward(cd, gout, &sink);
    Tensor g_f = enc.backward(ce, g_iq, &sink);

    CHECK(max_rel_error(g_f, fd_gradient(f, loss)) < 1e-4);
    Tensor fd_w = fd_gradient(enc.conv1.params[0], loss);
    CHECK(max_rel_error(*sink.find("enc.conv1.w"), fd_w) < 1e-4);
    Tensor fd_dw = fd_gradient(dec.deconv2.params[0], loss);
    CHECK(max_rel_error(*sink.find("dec.deconv2.w"), fd_dw) < 1e-4);
    Tensor fd_bn = fd_gradient(dec.bn1.params[0], loss);
    CHECK(max_rel_error(*sink.find("dec.bn1.gamma"), fd_bn) < 1e-4);
}
