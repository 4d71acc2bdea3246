#include "bgc/nn/layers.hpp"

#include <algorithm>
#include <cmath>

#include "bgc/errors.hpp"

namespace bgc::nn {

void conv_forward(const Tensor3& in, const double* weights, const double* bias,
                  int out_c, int k, Tensor3& out) {
    if (k % 2 == 0) throw ShapeMismatch("conv kernel must be odd");
    const int H = in.h, W = in.w, C = in.c, r = k / 2;
    out = Tensor3(out_c, H, W);
    for (int oc = 0; oc < out_c; ++oc) {
        double* op = out.plane(oc);
        const double b = bias[oc];
        for (std::size_t t = 0; t < static_cast<std::size_t>(H) * W; ++t)
            op[t] = b;
        for (int ic = 0; ic < C; ++ic) {
            const double* ip = in.plane(ic);
            const double* wk =
                weights + (static_cast<std::size_t>(oc) * C + ic) * k * k;
            for (int dy = -r; dy <= r; ++dy) {
                for (int dx = -r; dx <= r; ++dx) {
                    const double wv = wk[(dy + r) * k + (dx + r)];
                    if (wv == 0.0) continue;
                    const int y0 = std::max(0, -dy), y1 = std::min(H, H - dy);
                    const int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
                    for (int y = y0; y < y1; ++y) {
                        const double* src =
                            ip + static_cast<std::size_t>(y + dy) * W + dx;
                        double* dst = op + static_cast<std::size_t>(y) * W;
                        for (int x = x0; x < x1; ++x) dst[x] += wv * src[x];
                    }
                }
            }
        }
    }
}

void conv_backward(const Tensor3& in, const double* weights, int out_c, int k,
                   const Tensor3& d_out, Tensor3& d_in, double* d_weights,
                   double* d_bias) {
    const int H = in.h, W = in.w, C = in.c, r = k / 2;
    d_in = Tensor3(C, H, W);
    for (int oc = 0; oc < out_c; ++oc) {
        const double* gp = d_out.plane(oc);
        double bsum = 0.0;
        for (std::size_t t = 0; t < static_cast<std::size_t>(H) * W; ++t)
            bsum += gp[t];
        d_bias[oc] += bsum;
        for (int ic = 0; ic < C; ++ic) {
            const double* ip = in.plane(ic);
            double* dip = d_in.plane(ic);
            const double* wk =
                weights + (static_cast<std::size_t>(oc) * C + ic) * k * k;
            double* dwk =
                d_weights + (static_cast<std::size_t>(oc) * C + ic) * k * k;
            for (int dy = -r; dy <= r; ++dy) {
                for (int dx = -r; dx <= r; ++dx) {
                    const double wv = wk[(dy + r) * k + (dx + r)];
                    double wsum = 0.0;
                    const int y0 = std::max(0, -dy), y1 = std::min(H, H - dy);
                    const int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
                    for (int y = y0; y < y1; ++y) {
                        const double* src =
                            ip + static_cast<std::size_t>(y + dy) * W + dx;
                        double* dsrc =
                            dip + static_cast<std::size_t>(y + dy) * W + dx;
                        const double* g = gp + static_cast<std::size_t>(y) * W;
                        for (int x = x0; x < x1; ++x) {
                            wsum += g[x] * src[x];
                            dsrc[x] += g[x] * wv;
                        }
                    }
                    dwk[(dy + r) * k + (dx + r)] += wsum;
                }
            }
        }
    }
}

void relu_forward(const Tensor3& in, Tensor3& out) {
    out = Tensor3(in.c, in.h, in.w);
    for (std::size_t t = 0; t < in.size(); ++t)
        out.v[t] = in.v[t] > 0.0 ? in.v[t] : 0.0;
}

void relu_backward(const Tensor3& in, const Tensor3& d_out, Tensor3& d_in) {
    d_in = Tensor3(in.c, in.h, in.w);
    for (std::size_t t = 0; t < in.size(); ++t)
        d_in.v[t] = in.v[t] > 0.0 ? d_out.v[t] : 0.0;
}

void tanh_forward(const Tensor3& in, Tensor3& out) {
    out = Tensor3(in.c, in.h, in.w);
    for (std::size_t t = 0; t < in.size(); ++t) out.v[t] = std::tanh(in.v[t]);
}

void tanh_backward(const Tensor3& out, const Tensor3& d_out, Tensor3& d_in) {
    d_in = Tensor3(out.c, out.h, out.w);
    for (std::size_t t = 0; t < out.size(); ++t)
        d_in.v[t] = d_out.v[t] * (1.0 - out.v[t] * out.v[t]);
}

}  // namespace bgc::nn
