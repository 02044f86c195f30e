#include "cmsc/classic_phy.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace cmsc {

// ---------------------------------------------------------------------------
// Quantizer
// ---------------------------------------------------------------------------

BitStream quantize(const SparseFeaturePack& pack) {
    check(pack.features.all_finite(), "quantize: non-finite features");
    const int K = pack.k(), C = pack.features.ndim() == 2 ? pack.features.dim(1) : 0;
    BitStream out;
    out.framing.rows = K;
    out.framing.cols = C;
    out.framing.bits_per_value = 8;
    double minv = 0.0, maxv = 0.0;
    if (!pack.features.data.empty()) {
        minv = maxv = pack.features.data[0];
        for (double v : pack.features.data) {
            minv = std::min(minv, v);
            maxv = std::max(maxv, v);
        }
    }
    out.framing.minv = minv;
    out.framing.step = (maxv - minv) / 255.0;
    out.bits.resize(static_cast<size_t>(K) * C * 8);
    for (size_t i = 0; i < pack.features.data.size(); ++i) {
        int code = 0;
        if (out.framing.step > 0.0) {
            code = static_cast<int>(std::round((pack.features.data[i] - minv) / out.framing.step));
            code = std::clamp(code, 0, 255);
        }
        for (int b = 0; b < 8; ++b)
            out.bits[i * 8 + b] = static_cast<uint8_t>((code >> (7 - b)) & 1);
    }
    return out;
}

Tensor dequantize(const BitStream& stream) {
    const int K = stream.framing.rows, C = stream.framing.cols;
    check(stream.bits.size() == static_cast<size_t>(K) * C * 8,
          "dequantize: bit count does not match framing");
    Tensor out({K, C});
    for (size_t i = 0; i < out.data.size(); ++i) {
        int code = 0;
        for (int b = 0; b < 8; ++b) code = (code << 1) | stream.bits[i * 8 + b];
        out.data[i] = stream.framing.minv + code * stream.framing.step;
    }
    return out;
}

// ---------------------------------------------------------------------------
// 802.11n QC-LDPC (n = 648, Z = 27, rate 1/2)
// ---------------------------------------------------------------------------

namespace {

constexpr int kBlockRows = 12;
constexpr int kBlockCols = 24;
// Cyclic shift per Z x Z block; -1 marks an all-zero block. Parity part is
// the usual dual-diagonal structure with the shift-1 column at block 12.
constexpr int8_t kBase[kBlockRows][kBlockCols] = {
    { 0, -1, -1, -1,  0,  0, -1, -1,  0, -1, -1,  0,  1,  0, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    {22,  0, -1, -1, 17, -1,  0,  0, 12, -1, -1, -1, -1,  0,  0, -1, -1, -1, -1, -1, -1, -1, -1, -1},
    { 6, -1,  0, -1, 10, -1, -1, -1, 24, -1,  0, -1, -1, -1,  0,  0, -1, -1, -1, -1, -1, -1, -1, -1},
    { 2, -1, -1,  0, 20, -1, -1, -1, 25,  0, -1, -1, -1, -1, -1,  0,  0, -1, -1, -1, -1, -1, -1, -1},
    {23, -1, -1, -1,  3, -1, -1, -1,  0, -1,  9, 11, -1, -1, -1, -1,  0,  0, -1, -1, -1, -1, -1, -1},
    {24, -1, 23,  1, 17, -1,  3, -1, 10, -1, -1, -1, -1, -1, -1, -1, -1,  0,  0, -1, -1, -1, -1, -1},
    {25, -1, -1, -1,  8, -1, -1, -1,  7, 18, -1, -1,  0, -1, -1, -1, -1, -1,  0,  0, -1, -1, -1, -1},
    {13, 24, -1, -1,  0, -1,  8, -1,  6, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1,  0,  0, -1, -1, -1},
    { 7, 20, -1, 16, 22, 10, -1, -1, 23, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1,  0,  0, -1, -1},
    {11, -1, -1, -1, 19, -1, -1, -1, 13, -1,  3, 17, -1, -1, -1, -1, -1, -1, -1, -1, -1,  0,  0, -1},
    {25, -1,  8, -1, 23, 18, -1, 14,  9, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1,  0,  0},
    { 3, -1, -1, -1, 16, -1, -1,  2, 25,  5, -1, -1,  1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1,  0},
};

using ZVec = std::array<uint8_t, kLdpcZ>;

// rot(v, s)[i] = v[(i + s) mod Z]
ZVec rot(const ZVec& v, int s) {
    ZVec out;
    for (int i = 0; i < kLdpcZ; ++i) out[i] = v[(i + s) % kLdpcZ];
    return out;
}

void xor_into(ZVec& a, const ZVec& b) {
    for (int i = 0; i < kLdpcZ; ++i) a[i] ^= b[i];
}

// Check-node adjacency of the expanded 324 x 648 parity matrix.
struct LdpcGraph {
    std::vector<std::vector<int>> check_vars;  // per check, variable indices
    int n_edges = 0;
    LdpcGraph() {
        check_vars.resize(kBlockRows * kLdpcZ);
        for (int br = 0; br < kBlockRows; ++br)
            for (int bc = 0; bc < kBlockCols; ++bc) {
                const int s = kBase[br][bc];
                if (s < 0) continue;
                for (int i = 0; i < kLdpcZ; ++i) {
                    const int chk = br * kLdpcZ + i;
                    const int var = bc * kLdpcZ + (i + s) % kLdpcZ;
                    check_vars[static_cast<size_t>(chk)].push_back(var);
                    ++n_edges;
                }
            }
    }
};

const LdpcGraph& graph() {
    static const LdpcGraph g;
    return g;
}

}  // namespace

std::array<uint8_t, kLdpcN> ldpc_encode(const std::array<uint8_t, kLdpcK>& info) {
    // Block-wise partial syndromes of the information part.
    std::array<ZVec, kBlockRows> s{};
    for (int br = 0; br < kBlockRows; ++br) {
        s[br].fill(0);
        for (int bc = 0; bc < kBlockCols / 2; ++bc) {
            const int sh = kBase[br][bc];
            if (sh < 0) continue;
            ZVec x;
            std::memcpy(x.data(), info.data() + bc * kLdpcZ, kLdpcZ);
            xor_into(s[br], rot(x, sh));
        }
    }
    std::array<ZVec, kBlockRows> p{};
    // p0 = sum of all block syndromes (dual-diagonal telescopes away).
    p[0].fill(0);
    for (int br = 0; br < kBlockRows; ++br) xor_into(p[0], s[br]);
    // Forward substitution down the dual diagonal.
    p[1] = s[0];
    xor_into(p[1], rot(p[0], 1));
    for (int r = 1; r <= 10; ++r) {
        p[r + 1] = s[r];
        xor_into(p[r + 1], p[r]);
        if (r == 6) xor_into(p[r + 1], p[0]);
    }
    // Last row must close the recursion; this also guards the shift table.
    ZVec last = s[11];
    xor_into(last, rot(p[0], 1));
    xor_into(last, p[11]);
    for (int i = 0; i < kLdpcZ; ++i)
        check(last[i] == 0, "ldpc_encode: parity recursion failed to close");

    std::array<uint8_t, kLdpcN> cw{};
    std::memcpy(cw.data(), info.data(), kLdpcK);
    for (int r = 0; r < kBlockRows; ++r)
        std::memcpy(cw.data() + kLdpcK + r * kLdpcZ, p[r].data(), kLdpcZ);
    return cw;
}

bool ldpc_syndrome_ok(const uint8_t* codeword) {
    for (const auto& vars : graph().check_vars) {
        int acc = 0;
        for (int v : vars) acc ^= codeword[v];
        if (acc) return false;
    }
    return true;
}

LdpcDecodeResult ldpc_decode(const double* llrs, int max_iterations, double scale) {
    const LdpcGraph& g = graph();
    const int n_checks = static_cast<int>(g.check_vars.size());

    std::array<uint8_t, kLdpcN> hard;
    auto decide = [&](const double* totals) {
        for (int v = 0; v < kLdpcN; ++v) hard[v] = totals[v] < 0.0 ? 1 : 0;
    };

    LdpcDecodeResult res;
    decide(llrs);
    if (ldpc_syndrome_ok(hard.data())) {
        std::memcpy(res.info.data(), hard.data(), kLdpcK);
        res.converged = true;
        res.iterations = 0;
        return res;
    }

    // Edge arrays laid out per check.
    std::vector<double> v2c, c2v;
    std::vector<int> edge_var;
    std::vector<int> check_begin(n_checks + 1, 0);
    edge_var.reserve(g.n_edges);
    for (int c = 0; c < n_checks; ++c) {
        check_begin[c] = static_cast<int>(edge_var.size());
        for (int v : g.check_vars[static_cast<size_t>(c)]) edge_var.push_back(v);
    }
    check_begin[n_checks] = static_cast<int>(edge_var.size());
    v2c.resize(edge_var.size());
    c2v.assign(edge_var.size(), 0.0);
    for (size_t e = 0; e < edge_var.size(); ++e) v2c[e] = llrs[edge_var[e]];

    std::vector<double> totals(kLdpcN);
    for (int iter = 1; iter <= max_iterations; ++iter) {
        // Check-node pass: normalized min-sum.
        for (int c = 0; c < n_checks; ++c) {
            const int b = check_begin[c], e = check_begin[c + 1];
            double min1 = 1e300, min2 = 1e300;
            int argmin = -1, sign = 1;
            for (int k = b; k < e; ++k) {
                const double a = std::fabs(v2c[k]);
                if (a < min1) {
                    min2 = min1;
                    min1 = a;
                    argmin = k;
                } else if (a < min2) {
                    min2 = a;
                }
                if (v2c[k] < 0.0) sign = -sign;
            }
            for (int k = b; k < e; ++k) {
                const double mag = (k == argmin ? min2 : min1) * scale;
                const int s = v2c[k] < 0.0 ? -sign : sign;
                c2v[k] = s * mag;
            }
        }
        // Variable-node pass.
        for (int v = 0; v < kLdpcN; ++v) totals[v] = llrs[v];
        for (size_t e = 0; e < edge_var.size(); ++e) totals[edge_var[e]] += c2v[e];
        for (size_t e = 0; e < edge_var.size(); ++e) v2c[e] = totals[edge_var[e]] - c2v[e];

        decide(totals.data());
        if (ldpc_syndrome_ok(hard.data())) {
            std::memcpy(res.info.data(), hard.data(), kLdpcK);
            res.converged = true;
            res.iterations = iter;
            return res;
        }
    }
    std::memcpy(res.info.data(), hard.data(), kLdpcK);
    res.converged = false;
    res.iterations = max_iterations;
    return res;
}

// ---------------------------------------------------------------------------
// QAM
// ---------------------------------------------------------------------------

namespace {

int ilog2(int m) {
    int b = 0;
    while ((1 << b) < m) ++b;
    check((1 << b) == m, "qam: order must be a power of two");
    return b;
}

// Gray value -> PAM index.
int gray_to_index(int g) {
    int i = g;
    for (int s = 1; s < 16; s <<= 1) i ^= i >> s;
    return i;
}

struct AxisMap {
    std::vector<double> level_for_gray;  // indexed by gray bits value
    double scale;
    int bits;
};

AxisMap axis_map(int order) {
    const int nb = ilog2(order);
    check(nb % 2 == 0 && (order == 16 || order == 256), "qam: order must be 16 or 256");
    AxisMap am;
    am.bits = nb / 2;
    const int L = 1 << am.bits;
    am.scale = 1.0 / std::sqrt(2.0 * (L * L - 1) / 3.0);
    am.level_for_gray.resize(static_cast<size_t>(L));
    for (int g = 0; g < L; ++g)
        am.level_for_gray[static_cast<size_t>(g)] = 2.0 * gray_to_index(g) - (L - 1);
    return am;
}

}  // namespace

std::vector<std::complex<double>> qam_constellation(int order) {
    const AxisMap am = axis_map(order);
    const int nb = 2 * am.bits;
    std::vector<std::complex<double>> points(static_cast<size_t>(order));
    for (int v = 0; v < order; ++v) {
        const int gi = v >> am.bits;
        const int gq = v & ((1 << am.bits) - 1);
        points[static_cast<size_t>(v)] =
            std::complex<double>(am.level_for_gray[static_cast<size_t>(gi)],
                                 am.level_for_gray[static_cast<size_t>(gq)]) *
            am.scale;
    }
    (void)nb;
    return points;
}

std::vector<std::complex<double>> qam_modulate(const std::vector<uint8_t>& bits, int order) {
    const int nb = ilog2(order);
    check(bits.size() % static_cast<size_t>(nb) == 0,
          "qam_modulate: bit count not divisible by log2(order)");
    const auto points = qam_constellation(order);
    std::vector<std::complex<double>> out(bits.size() / nb);
    for (size_t s = 0; s < out.size(); ++s) {
        int v = 0;
        for (int b = 0; b < nb; ++b) v = (v << 1) | bits[s * nb + b];
        out[s] = points[static_cast<size_t>(v)];
    }
    return out;
}

std::vector<uint8_t> qam_hard_demodulate(const std::vector<std::complex<double>>& symbols,
                                         int order) {
    const int nb = ilog2(order);
    const auto points = qam_constellation(order);
    std::vector<uint8_t> bits(symbols.size() * static_cast<size_t>(nb));
    for (size_t s = 0; s < symbols.size(); ++s) {
        int best = 0;
        double bestd = 1e300;
        for (int v = 0; v < order; ++v) {
            const double d = std::norm(symbols[s] - points[static_cast<size_t>(v)]);
            if (d < bestd) {
                bestd = d;
                best = v;
            }
        }
        for (int b = 0; b < nb; ++b)
            bits[s * static_cast<size_t>(nb) + b] = static_cast<uint8_t>((best >> (nb - 1 - b)) & 1);
    }
    return bits;
}

std::vector<double> qam_demodulate(const std::vector<std::complex<double>>& received,
                                   const std::vector<std::complex<double>>& gains, double sigma2,
                                   int order) {
    check(sigma2 > 0.0, "qam_demodulate: sigma2 must be positive");
    check(gains.empty() || gains.size() == received.size(),
          "qam_demodulate: gains size mismatch");
    const AxisMap am = axis_map(order);
    const int nb = 2 * am.bits;
    const int L = 1 << am.bits;
    std::vector<double> llrs(received.size() * static_cast<size_t>(nb));
    std::vector<double> dist(static_cast<size_t>(L));
    for (size_t s = 0; s < received.size(); ++s) {
        std::complex<double> y = received[s];
        double h2 = 1.0;
        if (!gains.empty()) {
            const std::complex<double> h = gains[s];
            h2 = std::norm(h);
            y = h2 > 0.0 ? y * std::conj(h) / h2 : std::complex<double>(0.0, 0.0);
        }
        const double w = h2 / sigma2;
        for (int axis = 0; axis < 2; ++axis) {
            const double r = axis == 0 ? y.real() : y.imag();
            for (int g = 0; g < L; ++g) {
                const double d = r - am.level_for_gray[static_cast<size_t>(g)] * am.scale;
                dist[static_cast<size_t>(g)] = d * d;
            }
            // Max-log per bit of this axis: min distance over the bit-1 set
            // minus over the bit-0 set, scaled by |h|^2 / sigma^2.
            for (int b = 0; b < am.bits; ++b) {
                double m0 = 1e300, m1 = 1e300;
                for (int g = 0; g < L; ++g) {
                    const bool one = (g >> (am.bits - 1 - b)) & 1;
                    (one ? m1 : m0) = std::min(one ? m1 : m0, dist[static_cast<size_t>(g)]);
                }
                llrs[s * static_cast<size_t>(nb) + static_cast<size_t>(axis * am.bits + b)] =
                    w * (m1 - m0);
            }
        }
    }
    return llrs;
}

SymbolBlock symbols_to_block(const std::vector<std::complex<double>>& symbols) {
    SymbolBlock b;
    b.iq = Tensor({static_cast<int>(symbols.size()), 1, 2});
    for (size_t i = 0; i < symbols.size(); ++i) {
        b.iq.data[i * 2] = symbols[i].real();
        b.iq.data[i * 2 + 1] = symbols[i].imag();
    }
    b.power = 1.0;  // constellations are unit average energy by design
    return b;
}

std::vector<std::complex<double>> block_to_symbols(const SymbolBlock& block) {
    std::vector<std::complex<double>> out(static_cast<size_t>(block.iq.numel() / 2));
    for (size_t i = 0; i < out.size(); ++i)
        out[i] = std::complex<double>(block.iq.data[i * 2], block.iq.data[i * 2 + 1]);
    return out;
}

// ---------------------------------------------------------------------------
// Channel-use accounting
// ---------------------------------------------------------------------------

double channel_uses(double total_elements, double lambda, double code_rate, int mod_order) {
    check(total_elements > 0 && lambda > 0 && code_rate > 0 && mod_order > 1,
          "channel_uses: arguments must be positive");
    return total_elements * lambda * 8.0 / (code_rate * ilog2(mod_order));
}

ClassicBudget classic_budget(int grid_h, int grid_w, int channels, double lambda, int mod_order) {
    ClassicBudget b;
    b.k = selection_count(lambda, grid_h, grid_w);
    b.payload_bits = static_cast<long long>(b.k) * channels * 8;
    b.codewords = static_cast<int>((b.payload_bits + kLdpcK - 1) / kLdpcK);
    b.coded_bits = static_cast<long long>(b.codewords) * kLdpcN;
    b.symbols = b.coded_bits / ilog2(mod_order);
    return b;
}

long long jscc_symbol_count(int grid_h, int grid_w, int channels, double lambda) {
    return static_cast<long long>(selection_count(lambda, grid_h, grid_w)) * channels;
}

ClassicTxResult classic_transmit_chain(const SparseFeaturePack& pack, int mod_order) {
    ClassicTxResult out;
    BitStream stream = quantize(pack);
    out.framing = stream.framing;
    out.payload_bits = static_cast<long long>(stream.bits.size());
    const int codewords = static_cast<int>((stream.bits.size() + kLdpcK - 1) / kLdpcK);
    stream.bits.resize(static_cast<size_t>(codewords) * kLdpcK, 0);  // zero pad
    std::vector<uint8_t> coded(static_cast<size_t>(codewords) * kLdpcN);
    for (int c = 0; c < codewords; ++c) {
        std::array<uint8_t, kLdpcK> info;
        std::memcpy(info.data(), stream.bits.data() + static_cast<size_t>(c) * kLdpcK, kLdpcK);
        const auto cw = ldpc_encode(info);
        std::memcpy(coded.data() + static_cast<size_t>(c) * kLdpcN, cw.data(), kLdpcN);
    }
    out.block = symbols_to_block(qam_modulate(coded, mod_order));
    return out;
}

Tensor classic_receive_chain(const SymbolBlock& received, const ChannelRealization& real,
                             const QuantFraming& framing, long long payload_bits, int mod_order,
                             bool* all_converged) {
    const auto symbols = block_to_symbols(received);
    std::vector<std::complex<double>> gains;
    if (real.model == ChannelModel::Rayleigh) {
        gains.resize(symbols.size());
        for (size_t i = 0; i < gains.size(); ++i)
            gains[i] = std::complex<double>(real.gains.data[i * 2], real.gains.data[i * 2 + 1]);
    }
    // A noiseless channel still needs finite LLRs.
    const double sigma2 = real.sigma2 > 0.0 ? real.sigma2 : 1e-12;
    const auto llrs = qam_demodulate(symbols, gains, sigma2, mod_order);
    const int codewords = static_cast<int>(llrs.size()) / kLdpcN;
    std::vector<uint8_t> info_bits(static_cast<size_t>(codewords) * kLdpcK);
    bool converged = true;
    for (int c = 0; c < codewords; ++c) {
        const auto res = ldpc_decode(llrs.data() + static_cast<size_t>(c) * kLdpcN);
        converged = converged && res.converged;
        std::memcpy(info_bits.data() + static_cast<size_t>(c) * kLdpcK, res.info.data(), kLdpcK);
    }
    if (all_converged) *all_converged = converged;
    BitStream stream;
    stream.framing = framing;
    stream.bits.assign(info_bits.begin(), info_bits.begin() + payload_bits);
    return dequantize(stream);
}

}  // namespace cmsc
