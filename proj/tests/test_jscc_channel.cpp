#include <doctest.h>

#include "cmsc/channel.hpp"
#include "cmsc/jscc.hpp"
#include "test_util.hpp"

using namespace cmsc;
using test::fd_gradient;
using test::max_rel_error;
using test::random_tensor;

TEST_CASE("power_normalize") {
    SUBCASE("unit-power input is unchanged") {
        SymbolBlock b;
        b.iq = Tensor::from({2, 1, 2}, {1, 0, 0, 1});  // 1+0j, 0+1j
        b.power = measured_power(b.iq);
        SymbolBlock n = power_normalize(b);
        for (size_t i = 0; i < b.iq.data.size(); ++i)
            CHECK(n.iq.data[i] == doctest::Approx(b.iq.data[i]).epsilon(1e-12));
        CHECK(n.power == 1.0);
    }
    SUBCASE("single 2+0j among three zeros already has unit mean power") {
        SymbolBlock b;
        b.iq = Tensor::from({4, 1, 2}, {2, 0, 0, 0, 0, 0, 0, 0});
        SymbolBlock n = power_normalize(b);
        CHECK(n.iq.data[0] == doctest::Approx(2.0));  // mean |c|^2 = 4/4 = 1
        CHECK(measured_power(n.iq) == doctest::Approx(1.0));
    }
    SUBCASE("all-zero input is an error") {
        SymbolBlock b;
        b.iq = Tensor({3, 2, 2});
        CHECK_THROWS_AS(power_normalize(b), ContractError);
    }
    SUBCASE("normalization gradient matches finite differences") {
        Rng rng(4);
        Tensor x = random_tensor({3, 2, 2}, rng);
        Tensor probe = random_tensor({3, 2, 2}, rng);
        Tensor g = power_normalize_backward(x, probe);
        auto loss = [&] { return test::weighted_sum(power_normalize_forward(x), probe); };
        CHECK(max_rel_error(g, fd_gradient(x, loss)) < 1e-4);
    }
}

TEST_CASE("encoder/decoder contracts") {
    Rng rng(12);
    const int C = 8;
    JsccEncoder enc("enc", C);
    JsccDecoder dec("dec", C);
    enc.init_weights(rng);
    dec.init_weights(rng);

    SUBCASE("shapes, unit power, determinism") {
        Tensor f = random_tensor({10, C}, rng);
        JsccEncoder::Cache c1, c2;
        SymbolBlock b1 = enc.forward(f, c1, false);
        SymbolBlock b2 = enc.forward(f, c2, false);
        CHECK(b1.iq.shape == std::vector<int>{10, C, 2});
        CHECK(measured_power(b1.iq) == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(b1.iq.data == b2.iq.data);

        JsccDecoder::Cache cd;
        Tensor out = dec.forward(b1, cd, false);
        CHECK(out.shape == std::vector<int>{10, C});
    }
    SUBCASE("empty pack is rejected") {
        Tensor f({0, C});
        JsccEncoder::Cache c;
        CHECK_THROWS_AS(enc.forward(f, c, false), ContractError);
    }
    SUBCASE("decoder shape mismatch is rejected") {
        SymbolBlock b;
        b.iq = Tensor({5, C + 1, 2});
        b.power = 1.0;
        JsccDecoder::Cache c;
        CHECK_THROWS_AS(dec.forward(b, c, false), ContractError);
    }
    SUBCASE("symbol block byte round trip (float32 I/Q)") {
        Tensor f = random_tensor({6, C}, rng);
        JsccEncoder::Cache c;
        SymbolBlock b = enc.forward(f, c, false);
        SymbolBlock back = SymbolBlock::from_bytes(b.to_bytes(), 6, C);
        for (size_t i = 0; i < b.iq.data.size(); ++i)
            CHECK(back.iq.data[i] == doctest::Approx(b.iq.data[i]).epsilon(1e-6));
    }
}

TEST_CASE("snr_to_sigma2") {
    CHECK(snr_to_sigma2(0.0) == doctest::Approx(1.0));
    CHECK(snr_to_sigma2(10.0) == doctest::Approx(0.1));
    CHECK(snr_to_sigma2(20.0) == doctest::Approx(0.01));
    CHECK(snr_to_sigma2(kNoiselessSnrDb) == 0.0);
}

TEST_CASE("transmit") {
    Rng rng(9);
    SymbolBlock block;
    block.iq = random_tensor({50, 8, 2}, rng);
    block.iq = power_normalize_forward(block.iq);
    block.power = 1.0;

    SUBCASE("noiseless awgn is the identity") {
        auto tr = transmit(block, ChannelModel::Awgn, kNoiselessSnrDb, 1);
        CHECK(tr.received.iq.data == block.iq.data);
        CHECK(tr.realization.sigma2 == 0.0);
    }
    SUBCASE("snr 0 dB means sigma2 = 1") {
        auto tr = transmit(block, ChannelModel::Awgn, 0.0, 1);
        CHECK(tr.realization.sigma2 == doctest::Approx(1.0));
    }
    SUBCASE("non-normalized block is rejected") {
        SymbolBlock bad = block;
        bad.power = 1.5;
        CHECK_THROWS_AS(transmit(bad, ChannelModel::Awgn, 10.0, 1), ContractError);
    }
    SUBCASE("same seed reproduces the realization") {
        auto a = transmit(block, ChannelModel::Rayleigh, 5.0, 77);
        auto b = transmit(block, ChannelModel::Rayleigh, 5.0, 77);
        CHECK(a.received.iq.data == b.received.iq.data);
        CHECK(a.realization.gains.data == b.realization.gains.data);
    }
    SUBCASE("empirical snr within 0.1 dB over 1e6 symbols (awgn)") {
        SymbolBlock big;
        big.iq = Tensor({1000, 1000, 2});
        for (size_t i = 0; i < big.iq.data.size(); i += 2) big.iq.data[i] = 1.0;
        big.power = 1.0;
        auto tr = transmit(big, ChannelModel::Awgn, 10.0, 123);
        double noise = 0;
        for (size_t i = 0; i < big.iq.data.size(); ++i) {
            const double d = tr.received.iq.data[i] - big.iq.data[i];
            noise += d * d;
        }
        const double sigma2 = noise / (big.iq.numel() / 2);
        CHECK(-10.0 * std::log10(sigma2) == doctest::Approx(10.0).epsilon(0.01));
    }
    SUBCASE("rayleigh gain power is calibrated and fading is per-symbol") {
        SymbolBlock big;
        big.iq = Tensor({1000, 500, 2});
        for (size_t i = 0; i < big.iq.data.size(); i += 2) big.iq.data[i] = 1.0;
        big.power = 1.0;
        auto tr = transmit(big, ChannelModel::Rayleigh, kNoiselessSnrDb, 9);
        double p = 0;
        for (long long i = 0; i < big.iq.numel() / 2; ++i)
            p += tr.realization.gains.data[i * 2] * tr.realization.gains.data[i * 2] +
                 tr.realization.gains.data[i * 2 + 1] * tr.realization.gains.data[i * 2 + 1];
        p /= static_cast<double>(big.iq.numel() / 2);
        CHECK(p == doctest::Approx(1.0).epsilon(0.01));
        // distinct per-element gains
        CHECK(tr.realization.gains.data[0] != tr.realization.gains.data[2]);
    }
    SUBCASE("noise is white across positions") {
        SymbolBlock big;
        big.iq = Tensor({1 << 20, 1, 2});
        big.power = 1.0;
        auto tr = transmit(big, ChannelModel::Awgn, 0.0, 5);
        double c01 = 0, v = 0;
        const long long n = big.iq.numel() / 2;
        for (long long i = 0; i + 1 < n; ++i) {
            c01 += tr.received.iq.data[i * 2] * tr.received.iq.data[(i + 1) * 2];
            v += tr.received.iq.data[i * 2] * tr.received.iq.data[i * 2];
        }
        CHECK(std::fabs(c01 / v) < 0.01);
    }
}

TEST_CASE("equalize") {
    Rng rng(31);
    SymbolBlock block;
    block.iq = random_tensor({40, 4, 2}, rng);
    block.iq = power_normalize_forward(block.iq);
    block.power = 1.0;

    SUBCASE("noiseless rayleigh inverts exactly") {
        auto tr = transmit(block, ChannelModel::Rayleigh, kNoiselessSnrDb, 3);
        auto eq = equalize(tr.received, tr.realization);
        CHECK(eq.erasures == 0);
        for (size_t i = 0; i < block.iq.data.size(); ++i)
            CHECK(eq.symbols.iq.data[i] == doctest::Approx(block.iq.data[i]).epsilon(1e-9));
    }
    SUBCASE("awgn gains are unity so equalize is the identity") {
        auto tr = transmit(block, ChannelModel::Awgn, 10.0, 3);
        auto eq = equalize(tr.received, tr.realization);
        CHECK(eq.symbols.iq.data == tr.received.iq.data);
    }
    SUBCASE("deep fade becomes a counted erasure") {
        auto tr = transmit(block, ChannelModel::Rayleigh, kNoiselessSnrDb, 3);
        tr.realization.gains.data[10] = 1e-15;
        tr.realization.gains.data[11] = 0.0;
        auto eq = equalize(tr.received, tr.realization);
        CHECK(eq.erasures == 1);
        CHECK(eq.symbols.iq.data[10] == 0.0);
        CHECK(eq.symbols.iq.data[11] == 0.0);
    }
}
