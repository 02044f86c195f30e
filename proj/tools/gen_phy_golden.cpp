// Writes the committed PHY golden vectors: (info bits, codeword) pairs and
// (bits, symbols) pairs in hex text. Run from the repo root:
//   build/tools/gen_phy_golden tests/golden

#include <cstdio>
#include <string>
#include <vector>

#include "cmsc/classic_phy.hpp"
#include "cmsc/rng.hpp"

using namespace cmsc;

namespace {

std::string bits_to_hex(const uint8_t* bits, int n) {
    std::string out;
    for (int i = 0; i < n; i += 4) {
        int v = 0;
        for (int j = 0; j < 4 && i + j < n; ++j) v = (v << 1) | bits[i + j];
        if (i + 4 > n) v <<= (i + 4 - n);
        out += "0123456789abcdef"[v];
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    const std::string dir = argc > 1 ? argv[1] : "tests/golden";

    {
        const std::string path = dir + "/ldpc_vectors.txt";
        std::FILE* f = std::fopen(path.c_str(), "w");
        if (!f) {
            std::fprintf(stderr, "cannot open %s\n", path.c_str());
            return 1;
        }
        std::fprintf(f, "# info_hex codeword_hex (802.11n n=648 rate-1/2, systematic)\n");
        Rng rng(0xdecaf);
        for (int t = 0; t < 8; ++t) {
            std::array<uint8_t, kLdpcK> info;
            for (auto& b : info) b = t == 0 ? 0 : (rng.next_u64() & 1);
            const auto cw = ldpc_encode(info);
            std::fprintf(f, "%s %s\n", bits_to_hex(info.data(), kLdpcK).c_str(),
                         bits_to_hex(cw.data(), kLdpcN).c_str());
        }
        std::fclose(f);
        std::printf("wrote %s\n", path.c_str());
    }

    for (int order : {16, 256}) {
        const std::string path = dir + "/qam" + std::to_string(order) + "_vectors.txt";
        std::FILE* f = std::fopen(path.c_str(), "w");
        if (!f) {
            std::fprintf(stderr, "cannot open %s\n", path.c_str());
            return 1;
        }
        const int nb = order == 16 ? 4 : 8;
        std::fprintf(f, "# bits_hex re,im per symbol (Gray, unit average energy)\n");
        Rng rng(0xfeed + order);
        for (int t = 0; t < 6; ++t) {
            std::vector<uint8_t> bits(static_cast<size_t>(nb) * 8);
            for (auto& b : bits) b = t == 0 ? 0 : (rng.next_u64() & 1);
            const auto syms = qam_modulate(bits, order);
            std::fprintf(f, "%s", bits_to_hex(bits.data(), static_cast<int>(bits.size())).c_str());
            for (const auto& s : syms) std::fprintf(f, " %.17g,%.17g", s.real(), s.imag());
            std::fprintf(f, "\n");
        }
        std::fclose(f);
        std::printf("wrote %s\n", path.c_str());
    }
    return 0;
}
