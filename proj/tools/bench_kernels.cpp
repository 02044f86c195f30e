// Throughput comparison of the serial reference kernels against the
// OpenMP-parallel variants on pipeline-sized workloads.

#include <chrono>
#include <cstdio>
#include <vector>

#include "cmsc/kernels.hpp"
#include "cmsc/rng.hpp"

using namespace cmsc;
using kernels::ConvSpec;

namespace {

double now_s() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

template <typename F>
double time_loop(int reps, F&& fn) {
    fn();  // warm up
    const double t0 = now_s();
    for (int i = 0; i < reps; ++i) fn();
    return (now_s() - t0) / reps;
}

void bench_case(const char* name, int H, int W, const ConvSpec& s, int reps) {
    Rng rng(42);
    std::vector<double> in(static_cast<size_t>(H) * W * s.cin);
    std::vector<double> w(static_cast<size_t>(s.weight_count()));
    std::vector<double> b(static_cast<size_t>(s.cout));
    for (auto& v : in) v = rng.gaussian();
    for (auto& v : w) v = rng.gaussian();
    const int Ho = s.out_h(H), Wo = s.out_w(W);
    std::vector<double> out(static_cast<size_t>(Ho) * Wo * s.cout);
    std::vector<double> out_ref(out.size());

    const double ts = time_loop(reps, [&] {
        kernels::conv2d_forward_serial(in.data(), H, W, s, w.data(), b.data(), out_ref.data());
    });
    const double tp = time_loop(reps, [&] {
        kernels::conv2d_forward(in.data(), H, W, s, w.data(), b.data(), out.data());
    });
    bool identical = out == out_ref;
    const double macs = static_cast<double>(Ho) * Wo * s.kh * s.kw * s.cin_g() * s.cout;
    std::printf("%-28s serial %8.3f ms  parallel %8.3f ms  speedup %4.2fx  %6.2f GMAC/s  %s\n",
                name, ts * 1e3, tp * 1e3, ts / tp, macs / tp * 1e-9,
                identical ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main() {
    kernels::set_parallel(true);
    std::printf("conv2d forward, serial reference vs OpenMP\n");

    ConvSpec dw;
    dw.kh = dw.kw = 7;
    dw.py = dw.px = 3;
    dw.cin = dw.cout = 16;
    dw.groups = 16;
    bench_case("depthwise 7x7 32x32x16", 32, 32, dw, 50);

    ConvSpec pw;
    pw.cin = 16;
    pw.cout = 64;
    bench_case("pointwise 16->64 32x32", 32, 32, pw, 50);

    ConvSpec f3;
    f3.kh = f3.kw = 3;
    f3.py = f3.px = 1;
    f3.cin = f3.cout = 16;
    bench_case("3x3 16->16 32x32", 32, 32, f3, 50);

    ConvSpec row;
    row.kh = 3;
    row.kw = 1;
    row.py = 1;
    row.cin = 32;
    row.cout = 32;
    bench_case("row conv 3x1 62x1x32", 62, 1, row, 200);

    return 0;
}
