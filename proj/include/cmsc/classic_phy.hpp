#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <vector>

#include "cmsc/channel.hpp"
#include "cmsc/jscc.hpp"
#include "cmsc/selector.hpp"

namespace cmsc {

// ---------------------------------------------------------------------------
// Uniform 8-bit quantization
// ---------------------------------------------------------------------------

struct QuantFraming {
    int rows = 0, cols = 0;
    int bits_per_value = 8;
    double minv = 0.0;
    double step = 0.0;  // 0 for constant input: all codes 0, exact reconstruction
};

struct BitStream {
    std::vector<uint8_t> bits;  // one bit per element, MSB-first per value
    QuantFraming framing;
};

// Per-pack min/max affine mapping to 256 levels, round half away from zero.
// min/step ride in the framing (delivered out-of-band, not in the bit budget).
BitStream quantize(const SparseFeaturePack& pack);
Tensor dequantize(const BitStream& stream);

// ---------------------------------------------------------------------------
// IEEE 802.11n rate-1/2 QC-LDPC, n = 648, Z = 27
// ---------------------------------------------------------------------------

inline constexpr int kLdpcN = 648;
inline constexpr int kLdpcK = 324;
inline constexpr int kLdpcZ = 27;

// Systematic encoding: codeword = [info | parity].
std::array<uint8_t, kLdpcN> ldpc_encode(const std::array<uint8_t, kLdpcK>& info);

bool ldpc_syndrome_ok(const uint8_t* codeword);

struct LdpcDecodeResult {
    std::array<uint8_t, kLdpcK> info;
    bool converged = false;
    int iterations = 0;
};

// Normalized min-sum belief propagation (scale 0.8, default 25 iterations),
// early exit on zero syndrome. LLR sign convention: positive = bit 0.
LdpcDecodeResult ldpc_decode(const double* llrs, int max_iterations = 25, double scale = 0.8);

// ---------------------------------------------------------------------------
// Gray-mapped square QAM, unit average energy
// ---------------------------------------------------------------------------

// Constellation indexed by the bit pattern (MSB first; first half of the
// bits Gray-codes the I level, second half the Q level).
std::vector<std::complex<double>> qam_constellation(int order);

std::vector<std::complex<double>> qam_modulate(const std::vector<uint8_t>& bits, int order);
std::vector<uint8_t> qam_hard_demodulate(const std::vector<std::complex<double>>& symbols,
                                         int order);

// Coherent max-log LLRs. gains may be empty (unity, AWGN). Positive = bit 0.
std::vector<double> qam_demodulate(const std::vector<std::complex<double>>& received,
                                   const std::vector<std::complex<double>>& gains, double sigma2,
                                   int order);

// Wrap a flat symbol sequence as an N x 1 SymbolBlock at declared unit
// power (constellations have unit average energy by design).
SymbolBlock symbols_to_block(const std::vector<std::complex<double>>& symbols);
std::vector<std::complex<double>> block_to_symbols(const SymbolBlock& block);

// ---------------------------------------------------------------------------
// Channel-use accounting
// ---------------------------------------------------------------------------

// S_m * lambda * 8 / (R_c * log2 Mc)
double channel_uses(double total_elements, double lambda, double code_rate, int mod_order);

struct ClassicBudget {
    int k = 0;               // retained cells
    long long payload_bits = 0;
    int codewords = 0;       // padded to a codeword multiple
    long long coded_bits = 0;
    long long symbols = 0;   // actual channel uses including padding
};

ClassicBudget classic_budget(int grid_h, int grid_w, int channels, double lambda, int mod_order);

// Actual JSCC channel uses: K x C complex symbols.
long long jscc_symbol_count(int grid_h, int grid_w, int channels, double lambda);

// End-to-end classic chain on one pack: quantize -> LDPC -> QAM -> (caller
// runs the channel) -> demap -> decode -> dequantize.
struct ClassicTxResult {
    QuantFraming framing;
    long long payload_bits = 0;
    SymbolBlock block;
};

ClassicTxResult classic_transmit_chain(const SparseFeaturePack& pack, int mod_order);

// Returns the reconstructed K x C features. all_converged (optional) reports
// whether every codeword decoded to a zero syndrome.
Tensor classic_receive_chain(const SymbolBlock& received, const ChannelRealization& real,
                             const QuantFraming& framing, long long payload_bits, int mod_order,
                             bool* all_converged = nullptr);

}  // namespace cmsc
