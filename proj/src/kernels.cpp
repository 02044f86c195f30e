#include "cmsc/kernels.hpp"

#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cmsc::kernels {

namespace {
bool g_parallel = true;

// Row-driver: runs body(row) for row in [0, n), either serially or with
// OpenMP. The body must write disjoint outputs per row.
template <typename F>
void for_rows(int n, bool parallel, F&& body) {
#ifdef _OPENMP
    if (parallel) {
#pragma omp parallel for schedule(static)
        for (int r = 0; r < n; ++r) body(r);
        return;
    }
#endif
    (void)parallel;
    for (int r = 0; r < n; ++r) body(r);
}
}  // namespace

bool parallel_enabled() { return g_parallel; }
void set_parallel(bool on) { g_parallel = on; }

// ---------------------------------------------------------------------------
// conv2d
// ---------------------------------------------------------------------------

static void conv2d_forward_impl(const double* in, int H, int W, const ConvSpec& s,
                                const double* w, const double* b, double* out,
                                bool parallel) {
    const int Ho = s.out_h(H), Wo = s.out_w(W);
    const int cing = s.cin_g(), coutg = s.cout_g();
    if (s.groups == s.cin && s.cout == s.cin) {
        // Depthwise: accumulate over taps with a contiguous channel loop.
        // Same (ky, kx)-outer accumulation order as the generic path.
        for_rows(Ho, parallel, [&](int yo) {
            for (int xo = 0; xo < Wo; ++xo) {
                double* acc = out + (static_cast<size_t>(yo) * Wo + xo) * s.cout;
                for (int c = 0; c < s.cout; ++c) acc[c] = b ? b[c] : 0.0;
                for (int ky = 0; ky < s.kh; ++ky) {
                    const int yi = yo * s.sy - s.py + ky;
                    if (yi < 0 || yi >= H) continue;
                    for (int kx = 0; kx < s.kw; ++kx) {
                        const int xi = xo * s.sx - s.px + kx;
                        if (xi < 0 || xi >= W) continue;
                        const double* irow = in + (static_cast<size_t>(yi) * W + xi) * s.cin;
                        const double* wk = w + (static_cast<size_t>(ky) * s.kw + kx) * s.cout;
                        for (int c = 0; c < s.cout; ++c) acc[c] += irow[c] * wk[c];
                    }
                }
            }
        });
        return;
    }
    for_rows(Ho, parallel, [&](int yo) {
        for (int xo = 0; xo < Wo; ++xo) {
            double* acc = out + (static_cast<size_t>(yo) * Wo + xo) * s.cout;
            for (int oc = 0; oc < s.cout; ++oc) acc[oc] = b ? b[oc] : 0.0;
            for (int ky = 0; ky < s.kh; ++ky) {
                const int yi = yo * s.sy - s.py + ky;
                if (yi < 0 || yi >= H) continue;
                for (int kx = 0; kx < s.kw; ++kx) {
                    const int xi = xo * s.sx - s.px + kx;
                    if (xi < 0 || xi >= W) continue;
                    const double* irow = in + (static_cast<size_t>(yi) * W + xi) * s.cin;
                    const double* wk = w + (static_cast<size_t>(ky) * s.kw + kx) * cing * s.cout;
                    for (int g = 0; g < s.groups; ++g) {
                        for (int icg = 0; icg < cing; ++icg) {
                            const double v = irow[g * cing + icg];
                            const double* wr = wk + static_cast<size_t>(icg) * s.cout + g * coutg;
                            double* ar = acc + g * coutg;
                            for (int ocg = 0; ocg < coutg; ++ocg) ar[ocg] += v * wr[ocg];
                        }
                    }
                }
            }
        }
    });
}

void conv2d_forward(const double* in, int H, int W, const ConvSpec& s,
                    const double* w, const double* b, double* out) {
    conv2d_forward_impl(in, H, W, s, w, b, out, g_parallel);
}
void conv2d_forward_serial(const double* in, int H, int W, const ConvSpec& s,
                           const double* w, const double* b, double* out) {
    conv2d_forward_impl(in, H, W, s, w, b, out, false);
}

static void conv2d_backward_input_impl(const double* gout, int H, int W, const ConvSpec& s,
                                       const double* w, double* gin, bool parallel) {
    const int Ho = s.out_h(H), Wo = s.out_w(W);
    const int cing = s.cin_g(), coutg = s.cout_g();
    if (s.groups == s.cin && s.cout == s.cin) {
        for_rows(H, parallel, [&](int yi) {
            for (int xi = 0; xi < W; ++xi) {
                double* grow = gin + (static_cast<size_t>(yi) * W + xi) * s.cin;
                for (int c = 0; c < s.cin; ++c) grow[c] = 0.0;
                for (int ky = 0; ky < s.kh; ++ky) {
                    const int ty = yi + s.py - ky;
                    if (ty < 0 || ty % s.sy != 0) continue;
                    const int yo = ty / s.sy;
                    if (yo >= Ho) continue;
                    for (int kx = 0; kx < s.kw; ++kx) {
                        const int tx = xi + s.px - kx;
                        if (tx < 0 || tx % s.sx != 0) continue;
                        const int xo = tx / s.sx;
                        if (xo >= Wo) continue;
                        const double* gorow =
                            gout + (static_cast<size_t>(yo) * Wo + xo) * s.cout;
                        const double* wk = w + (static_cast<size_t>(ky) * s.kw + kx) * s.cout;
                        for (int c = 0; c < s.cin; ++c) grow[c] += gorow[c] * wk[c];
                    }
                }
            }
        });
        return;
    }
    for_rows(H, parallel, [&](int yi) {
        for (int xi = 0; xi < W; ++xi) {
            double* grow = gin + (static_cast<size_t>(yi) * W + xi) * s.cin;
            for (int ic = 0; ic < s.cin; ++ic) grow[ic] = 0.0;
            for (int ky = 0; ky < s.kh; ++ky) {
                const int ty = yi + s.py - ky;
                if (ty < 0 || ty % s.sy != 0) continue;
                const int yo = ty / s.sy;
                if (yo >= Ho) continue;
                for (int kx = 0; kx < s.kw; ++kx) {
                    const int tx = xi + s.px - kx;
                    if (tx < 0 || tx % s.sx != 0) continue;
                    const int xo = tx / s.sx;
                    if (xo >= Wo) continue;
                    const double* gorow = gout + (static_cast<size_t>(yo) * Wo + xo) * s.cout;
                    const double* wk = w + (static_cast<size_t>(ky) * s.kw + kx) * cing * s.cout;
                    for (int g = 0; g < s.groups; ++g) {
                        for (int icg = 0; icg < cing; ++icg) {
                            const double* wr = wk + static_cast<size_t>(icg) * s.cout + g * coutg;
                            const double* gr = gorow + g * coutg;
                            double acc = 0.0;
                            for (int ocg = 0; ocg < coutg; ++ocg) acc += gr[ocg] * wr[ocg];
                            grow[g * cing + icg] += acc;
                        }
                    }
                }
            }
        }
    });
}

void conv2d_backward_input(const double* gout, int H, int W, const ConvSpec& s,
                           const double* w, double* gin) {
    conv2d_backward_input_impl(gout, H, W, s, w, gin, g_parallel);
}
void conv2d_backward_input_serial(const double* gout, int H, int W, const ConvSpec& s,
                                  const double* w, double* gin) {
    conv2d_backward_input_impl(gout, H, W, s, w, gin, false);
}

static void conv2d_backward_params_impl(const double* gout, const double* in, int H, int W,
                                        const ConvSpec& s, double* gw, double* gb,
                                        bool parallel) {
    const int Ho = s.out_h(H), Wo = s.out_w(W);
    const int cing = s.cin_g(), coutg = s.cout_g();
    const int ktaps = s.kh * s.kw * cing;
    // One thread owns all output channels of one (ky, kx, icg) tap. The scan
    // is grid-major with a contiguous channel loop inside; per weight element
    // the accumulation order is the same in every variant.
    for_rows(ktaps, parallel, [&](int tap) {
        const int icg = tap % cing;
        const int kx = (tap / cing) % s.kw;
        const int ky = tap / (cing * s.kw);
        double* gwr = gw + static_cast<size_t>(tap) * s.cout;
        for (int oc = 0; oc < s.cout; ++oc) gwr[oc] = 0.0;
        const bool dense = s.groups == 1;
        const bool depthwise = s.groups == s.cin && s.cout == s.cin;
        for (int yo = 0; yo < Ho; ++yo) {
            const int yi = yo * s.sy - s.py + ky;
            if (yi < 0 || yi >= H) continue;
            for (int xo = 0; xo < Wo; ++xo) {
                const int xi = xo * s.sx - s.px + kx;
                if (xi < 0 || xi >= W) continue;
                const double* go = gout + (static_cast<size_t>(yo) * Wo + xo) * s.cout;
                const double* irow = in + (static_cast<size_t>(yi) * W + xi) * s.cin;
                if (dense) {
                    const double v = irow[icg];
                    for (int oc = 0; oc < s.cout; ++oc) gwr[oc] += go[oc] * v;
                } else if (depthwise) {
                    for (int oc = 0; oc < s.cout; ++oc) gwr[oc] += go[oc] * irow[oc];
                } else {
                    for (int oc = 0; oc < s.cout; ++oc)
                        gwr[oc] += go[oc] * irow[(oc / coutg) * cing + icg];
                }
            }
        }
    });
    if (gb) {
        for_rows(s.cout, parallel, [&](int oc) {
            double acc = 0.0;
            const size_t n = static_cast<size_t>(Ho) * Wo;
            for (size_t i = 0; i < n; ++i) acc += gout[i * s.cout + oc];
            gb[oc] = acc;
        });
    }
}

void conv2d_backward_params(const double* gout, const double* in, int H, int W,
                            const ConvSpec& s, double* gw, double* gb) {
    conv2d_backward_params_impl(gout, in, H, W, s, gw, gb, g_parallel);
}
void conv2d_backward_params_serial(const double* gout, const double* in, int H, int W,
                                   const ConvSpec& s, double* gw, double* gb) {
    conv2d_backward_params_impl(gout, in, H, W, s, gw, gb, false);
}

// ---------------------------------------------------------------------------
// deconv2d (transposed convolution, adjoint of conv2d with the same spec)
// ---------------------------------------------------------------------------

static void deconv2d_forward_impl(const double* in, int H, int W, const ConvSpec& s,
                                  const double* w, const double* b, double* out,
                                  bool parallel) {
    const int Ho = s.deconv_out_h(H), Wo = s.deconv_out_w(W);
    const int cing = s.cin_g(), coutg = s.cout_g();
    for_rows(Ho, parallel, [&](int yo) {
        for (int xo = 0; xo < Wo; ++xo) {
            double* acc = out + (static_cast<size_t>(yo) * Wo + xo) * s.cout;
            for (int oc = 0; oc < s.cout; ++oc) acc[oc] = b ? b[oc] : 0.0;
            for (int ky = 0; ky < s.kh; ++ky) {
                const int ty = yo + s.py - ky;
                if (ty < 0 || ty % s.sy != 0) continue;
                const int yi = ty / s.sy;
                if (yi >= H) continue;
                for (int kx = 0; kx < s.kw; ++kx) {
                    const int tx = xo + s.px - kx;
                    if (tx < 0 || tx % s.sx != 0) continue;
                    const int xi = tx / s.sx;
                    if (xi >= W) continue;
                    const double* irow = in + (static_cast<size_t>(yi) * W + xi) * s.cin;
                    const double* wk = w + (static_cast<size_t>(ky) * s.kw + kx) * cing * s.cout;
                    for (int g = 0; g < s.groups; ++g) {
                        for (int icg = 0; icg < cing; ++icg) {
                            const double v = irow[g * cing + icg];
                            const double* wr = wk + static_cast<size_t>(icg) * s.cout + g * coutg;
                            double* ar = acc + g * coutg;
                            for (int ocg = 0; ocg < coutg; ++ocg) ar[ocg] += v * wr[ocg];
                        }
                    }
                }
            }
        }
    });
}

void deconv2d_forward(const double* in, int H, int W, const ConvSpec& s,
                      const double* w, const double* b, double* out) {
    deconv2d_forward_impl(in, H, W, s, w, b, out, g_parallel);
}
void deconv2d_forward_serial(const double* in, int H, int W, const ConvSpec& s,
                             const double* w, const double* b, double* out) {
    deconv2d_forward_impl(in, H, W, s, w, b, out, false);
}

static void deconv2d_backward_input_impl(const double* gout, int H, int W, const ConvSpec& s,
                                         const double* w, double* gin, bool parallel) {
    const int Ho = s.deconv_out_h(H), Wo = s.deconv_out_w(W);
    const int cing = s.cin_g(), coutg = s.cout_g();
    for_rows(H, parallel, [&](int yi) {
        for (int xi = 0; xi < W; ++xi) {
            double* grow = gin + (static_cast<size_t>(yi) * W + xi) * s.cin;
            for (int ic = 0; ic < s.cin; ++ic) grow[ic] = 0.0;
            for (int ky = 0; ky < s.kh; ++ky) {
                const int yo = yi * s.sy - s.py + ky;
                if (yo < 0 || yo >= Ho) continue;
                for (int kx = 0; kx < s.kw; ++kx) {
                    const int xo = xi * s.sx - s.px + kx;
                    if (xo < 0 || xo >= Wo) continue;
                    const double* gorow = gout + (static_cast<size_t>(yo) * Wo + xo) * s.cout;
                    const double* wk = w + (static_cast<size_t>(ky) * s.kw + kx) * cing * s.cout;
                    for (int g = 0; g < s.groups; ++g) {
                        for (int icg = 0; icg < cing; ++icg) {
                            const double* wr = wk + static_cast<size_t>(icg) * s.cout + g * coutg;
                            const double* gr = gorow + g * coutg;
                            double acc = 0.0;
                            for (int ocg = 0; ocg < coutg; ++ocg) acc += gr[ocg] * wr[ocg];
                            grow[g * cing + icg] += acc;
                        }
                    }
                }
            }
        }
    });
}

void deconv2d_backward_input(const double* gout, int H, int W, const ConvSpec& s,
                             const double* w, double* gin) {
    deconv2d_backward_input_impl(gout, H, W, s, w, gin, g_parallel);
}
void deconv2d_backward_input_serial(const double* gout, int H, int W, const ConvSpec& s,
                                    const double* w, double* gin) {
    deconv2d_backward_input_impl(gout, H, W, s, w, gin, false);
}

static void deconv2d_backward_params_impl(const double* gout, const double* in, int H, int W,
                                          const ConvSpec& s, double* gw, double* gb,
                                          bool parallel) {
    const int Ho = s.deconv_out_h(H), Wo = s.deconv_out_w(W);
    const int cing = s.cin_g(), coutg = s.cout_g();
    const int ktaps = s.kh * s.kw * cing;
    for_rows(ktaps, parallel, [&](int tap) {
        const int icg = tap % cing;
        const int kx = (tap / cing) % s.kw;
        const int ky = tap / (cing * s.kw);
        double* gwr = gw + static_cast<size_t>(tap) * s.cout;
        for (int oc = 0; oc < s.cout; ++oc) gwr[oc] = 0.0;
        const bool dense = s.groups == 1;
        for (int yi = 0; yi < H; ++yi) {
            const int yo = yi * s.sy - s.py + ky;
            if (yo < 0 || yo >= Ho) continue;
            for (int xi = 0; xi < W; ++xi) {
                const int xo = xi * s.sx - s.px + kx;
                if (xo < 0 || xo >= Wo) continue;
                const double* go = gout + (static_cast<size_t>(yo) * Wo + xo) * s.cout;
                const double* irow = in + (static_cast<size_t>(yi) * W + xi) * s.cin;
                if (dense) {
                    const double v = irow[icg];
                    for (int oc = 0; oc < s.cout; ++oc) gwr[oc] += go[oc] * v;
                } else {
                    for (int oc = 0; oc < s.cout; ++oc)
                        gwr[oc] += go[oc] * irow[(oc / coutg) * cing + icg];
                }
            }
        }
    });
    if (gb) {
        for_rows(s.cout, parallel, [&](int oc) {
            double acc = 0.0;
            const size_t n = static_cast<size_t>(Ho) * Wo;
            for (size_t i = 0; i < n; ++i) acc += gout[i * s.cout + oc];
            gb[oc] = acc;
        });
    }
}

void deconv2d_backward_params(const double* gout, const double* in, int H, int W,
                              const ConvSpec& s, double* gw, double* gb) {
    deconv2d_backward_params_impl(gout, in, H, W, s, gw, gb, g_parallel);
}
void deconv2d_backward_params_serial(const double* gout, const double* in, int H, int W,
                                     const ConvSpec& s, double* gw, double* gb) {
    deconv2d_backward_params_impl(gout, in, H, W, s, gw, gb, false);
}

}  // namespace cmsc::kernels
