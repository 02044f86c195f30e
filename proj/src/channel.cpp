#include "cmsc/channel.hpp"

#include <cmath>

#include "cmsc/rng.hpp"

namespace cmsc {

const char* channel_model_name(ChannelModel m) {
    return m == ChannelModel::Awgn ? "awgn" : "rayleigh";
}

ChannelModel channel_model_from_name(const std::string& s) {
    if (s == "awgn") return ChannelModel::Awgn;
    if (s == "rayleigh") return ChannelModel::Rayleigh;
    contract_fail("unknown channel model: " + s);
}

double snr_to_sigma2(double snr_db) {
    if (snr_db == kNoiselessSnrDb) return 0.0;
    return std::pow(10.0, -snr_db / 10.0);
}

TransmitResult transmit(const SymbolBlock& block, ChannelModel model, double snr_db,
                        uint64_t seed) {
    check(std::abs(block.power - 1.0) <= 1e-6,
          "transmit: symbol block is not power-normalized (declared power " +
              std::to_string(block.power) + "); SNR calibration would be wrong");
    const int R = block.rows(), C = block.cols();
    TransmitResult out;
    out.realization.model = model;
    out.realization.snr_db = snr_db;
    out.realization.sigma2 = snr_to_sigma2(snr_db);
    out.realization.gains = Tensor({R, C, 2});
    out.received.iq = Tensor({R, C, 2});
    out.received.power = block.power;

    Rng rng(hash_combine(seed, 0xc4a7ull));
    const double noise_scale = std::sqrt(out.realization.sigma2 / 2.0);
    const double fade_scale = std::sqrt(0.5);
    for (long long i = 0; i < static_cast<long long>(R) * C; ++i) {
        double hr = 1.0, hi = 0.0;
        if (model == ChannelModel::Rayleigh) {
            hr = fade_scale * rng.gaussian();
            hi = fade_scale * rng.gaussian();
        }
        out.realization.gains.data[i * 2] = hr;
        out.realization.gains.data[i * 2 + 1] = hi;
        const double cr = block.iq.data[i * 2], ci = block.iq.data[i * 2 + 1];
        double yr = hr * cr - hi * ci;
        double yi = hr * ci + hi * cr;
        if (noise_scale > 0.0) {
            yr += noise_scale * rng.gaussian();
            yi += noise_scale * rng.gaussian();
        }
        out.received.iq.data[i * 2] = yr;
        out.received.iq.data[i * 2 + 1] = yi;
    }
    return out;
}

EqualizeResult equalize(const SymbolBlock& received, const ChannelRealization& real) {
    check(received.iq.same_shape(real.gains), "equalize: gains shape mismatch");
    EqualizeResult out;
    out.symbols.iq = Tensor(received.iq.shape);
    out.symbols.power = received.power;
    const long long n = received.iq.numel() / 2;
    for (long long i = 0; i < n; ++i) {
        const double hr = real.gains.data[i * 2], hi = real.gains.data[i * 2 + 1];
        const double mag2 = hr * hr + hi * hi;
        if (mag2 < 1e-24) {  // |H| < 1e-12: flag as erasure
            out.symbols.iq.data[i * 2] = 0.0;
            out.symbols.iq.data[i * 2 + 1] = 0.0;
            ++out.erasures;
            continue;
        }
        const double yr = received.iq.data[i * 2], yi = received.iq.data[i * 2 + 1];
        out.symbols.iq.data[i * 2] = (yr * hr + yi * hi) / mag2;
        out.symbols.iq.data[i * 2 + 1] = (yi * hr - yr * hi) / mag2;
    }
    return out;
}

}  // namespace cmsc
