#pragma once

#include <limits>

#include "cmsc/jscc.hpp"

namespace cmsc {

enum class ChannelModel { Awgn, Rayleigh };

const char* channel_model_name(ChannelModel m);
ChannelModel channel_model_from_name(const std::string& s);

// Noiseless sentinel: transmit() adds no noise at snr_db = +inf.
inline constexpr double kNoiselessSnrDb = std::numeric_limits<double>::infinity();

// sigma^2 = 10^(-snr_db/10) under unit signal power; the per-complex-symbol
// noise variance is split equally over I and Q.
double snr_to_sigma2(double snr_db);

struct ChannelRealization {
    Tensor gains;  // rows x cols x 2; AWGN: all 1+0j
    double sigma2 = 0.0;
    double snr_db = 0.0;
    ChannelModel model = ChannelModel::Awgn;
};

struct TransmitResult {
    SymbolBlock received;
    ChannelRealization realization;
};

// Y = H o C + n, per-symbol i.i.d. fading (Rayleigh: CN(0,1) gains), noise
// CN(0, sigma^2). Deterministic in seed. Requires a power-normalized block.
TransmitResult transmit(const SymbolBlock& block, ChannelModel model, double snr_db,
                        uint64_t seed);

struct EqualizeResult {
    SymbolBlock symbols;
    int erasures = 0;  // elements zeroed because |H| fell below 1e-12
};

// Zero-forcing with perfect CSI: C_hat = Y / H element-wise.
EqualizeResult equalize(const SymbolBlock& received, const ChannelRealization& real);

}  // namespace cmsc
