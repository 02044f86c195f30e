#pragma once

#include <cstdint>

namespace cmsc::kernels {

// Geometry of a (possibly grouped) 2-D convolution over H x W x C maps.
// Weights are laid out [kh][kw][cin/groups][cout]; output channel oc reads
// input channels of its own group only.
struct ConvSpec {
    int kh = 1, kw = 1;
    int cin = 1, cout = 1;
    int groups = 1;
    int sy = 1, sx = 1;
    int py = 0, px = 0;

    int out_h(int H) const { return (H + 2 * py - kh) / sy + 1; }
    int out_w(int W) const { return (W + 2 * px - kw) / sx + 1; }
    // Transposed-conv output size for the same spec.
    int deconv_out_h(int H) const { return (H - 1) * sy - 2 * py + kh; }
    int deconv_out_w(int W) const { return (W - 1) * sx - 2 * px + kw; }
    int cin_g() const { return cin / groups; }
    int cout_g() const { return cout / groups; }
    long long weight_count() const {
        return static_cast<long long>(kh) * kw * cin_g() * cout;
    }
};

// Global execution switch. The parallel variants assign each output element
// to exactly one thread and keep the serial accumulation order, so results
// are bit-identical to the *_serial reference implementations for any
// thread count.
bool parallel_enabled();
void set_parallel(bool on);

// out must hold out_h(H) * out_w(W) * cout values. b may be null.
void conv2d_forward(const double* in, int H, int W, const ConvSpec& s,
                    const double* w, const double* b, double* out);
void conv2d_forward_serial(const double* in, int H, int W, const ConvSpec& s,
                           const double* w, const double* b, double* out);

// gin must hold H * W * cin values (input-sized).
void conv2d_backward_input(const double* gout, int H, int W, const ConvSpec& s,
                           const double* w, double* gin);
void conv2d_backward_input_serial(const double* gout, int H, int W, const ConvSpec& s,
                                  const double* w, double* gin);

// gw holds weight_count() values, gb (may be null) cout values.
void conv2d_backward_params(const double* gout, const double* in, int H, int W,
                            const ConvSpec& s, double* gw, double* gb);
void conv2d_backward_params_serial(const double* gout, const double* in, int H, int W,
                                   const ConvSpec& s, double* gw, double* gb);

void deconv2d_forward(const double* in, int H, int W, const ConvSpec& s,
                      const double* w, const double* b, double* out);
void deconv2d_forward_serial(const double* in, int H, int W, const ConvSpec& s,
                             const double* w, const double* b, double* out);

void deconv2d_backward_input(const double* gout, int H, int W, const ConvSpec& s,
                             const double* w, double* gin);
void deconv2d_backward_input_serial(const double* gout, int H, int W, const ConvSpec& s,
                                    const double* w, double* gin);

void deconv2d_backward_params(const double* gout, const double* in, int H, int W,
                              const ConvSpec& s, double* gw, double* gb);
void deconv2d_backward_params_serial(const double* gout, const double* in, int H, int W,
                                     const ConvSpec& s, double* gw, double* gb);

}  // namespace cmsc::kernels
