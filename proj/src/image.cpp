#include "libra/image.hpp"

#include <algorithm>
#include <cmath>

#include "libra/parallel.hpp"

namespace libra {

namespace {

void area_down_plane(const double* in, int h, int w, int p, double* out) {
    const int oh = h / p, ow = w / p;
    const double inv = 1.0 / (static_cast<double>(p) * p);
    parallel_for(0, oh, [&](std::int64_t r0, std::int64_t r1) {
        for (std::int64_t oy = r0; oy < r1; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                double s = 0.0;
                for (int dy = 0; dy < p; ++dy) {
                    const double* row = in + (oy * p + dy) * w + ox * p;
                    for (int dx = 0; dx < p; ++dx) s += row[dx];
                }
                out[oy * ow + ox] = s * inv;
            }
        }
    });
}

void bilinear_resize_plane(const double* in, int h, int w, int oh, int ow, double* out) {
    std::vector<ResizeTap> xt(static_cast<std::size_t>(ow));
    for (int ox = 0; ox < ow; ++ox) xt[ox] = resize_tap(ox, w, ow);
    parallel_for(0, oh, [&](std::int64_t r0, std::int64_t r1) {
        for (std::int64_t oy = r0; oy < r1; ++oy) {
            const ResizeTap ty = resize_tap(static_cast<int>(oy), h, oh);
            const double* row0 = in + static_cast<std::size_t>(ty.i0) * w;
            const double* row1 = in + static_cast<std::size_t>(ty.i1) * w;
            double* orow = out + oy * ow;
            for (int ox = 0; ox < ow; ++ox) {
                const ResizeTap& tx = xt[ox];
                const double top = row0[tx.i0] + (row0[tx.i1] - row0[tx.i0]) * tx.w1;
                const double bot = row1[tx.i0] + (row1[tx.i1] - row1[tx.i0]) * tx.w1;
                orow[ox] = top + (bot - top) * ty.w1;
            }
        }
    });
}

}  // namespace

ResizeTap resize_tap(int out_index, int n_in, int n_out) {
    const double u = (out_index + 0.5) * static_cast<double>(n_in) / n_out - 0.5;
    const double f = std::floor(u);
    ResizeTap t;
    t.w1 = u - f;
    const int i = static_cast<int>(f);
    t.i0 = std::clamp(i, 0, n_in - 1);
    t.i1 = std::clamp(i + 1, 0, n_in - 1);
    return t;
}

ScalarField area_downsample(const ScalarField& in, int p) {
    if (p < 1 || in.height % p != 0 || in.width % p != 0) {
        throw ShapeMismatch("area_downsample: dims must be divisible by p");
    }
    if (p == 1) return in;
    ScalarField out(in.height / p, in.width / p);
    area_down_plane(in.v.data(), in.height, in.width, p, out.v.data());
    return out;
}

Frame area_downsample(const Frame& in, int p) {
    if (p < 1 || in.height % p != 0 || in.width % p != 0) {
        throw ShapeMismatch("area_downsample: dims must be divisible by p");
    }
    if (p == 1) return in;
    Frame out(in.height / p, in.width / p);
    for (int c = 0; c < 3; ++c) {
        area_down_plane(in.plane(c), in.height, in.width, p, out.plane(c));
    }
    return out;
}

ScalarField bilinear_resize(const ScalarField& in, int out_h, int out_w) {
    if (in.height == out_h && in.width == out_w) return in;
    ScalarField out(out_h, out_w);
    bilinear_resize_plane(in.v.data(), in.height, in.width, out_h, out_w, out.v.data());
    return out;
}

Frame bilinear_resize(const Frame& in, int out_h, int out_w) {
    if (in.height == out_h && in.width == out_w) return in;
    Frame out(out_h, out_w);
    for (int c = 0; c < 3; ++c) {
        bilinear_resize_plane(in.plane(c), in.height, in.width, out_h, out_w, out.plane(c));
    }
    return out;
}

double bilinear_sample(const ScalarField& f, double x, double y) {
    const double fx = std::floor(x), fy = std::floor(y);
    const double wx = x - fx, wy = y - fy;
    const int x0 = std::clamp(static_cast<int>(fx), 0, f.width - 1);
    const int x1 = std::clamp(static_cast<int>(fx) + 1, 0, f.width - 1);
    const int y0 = std::clamp(static_cast<int>(fy), 0, f.height - 1);
    const int y1 = std::clamp(static_cast<int>(fy) + 1, 0, f.height - 1);
    const double top = f.at(y0, x0) + (f.at(y0, x1) - f.at(y0, x0)) * wx;
    const double bot = f.at(y1, x0) + (f.at(y1, x1) - f.at(y1, x0)) * wx;
    return top + (bot - top) * wy;
}

ScalarField warp_backward(const ScalarField& prev, const FlowField& flow,
                          const ScalarField* fallback,
                          std::vector<unsigned char>* in_bounds) {
    if (prev.height != flow.height || prev.width != flow.width) {
        throw ShapeMismatch("warp_backward: field and flow dims differ");
    }
    if (fallback && !prev.same_shape(*fallback)) {
        throw ShapeMismatch("warp_backward: fallback dims differ");
    }
    const int h = prev.height, w = prev.width;
    ScalarField out(h, w);
    if (in_bounds) in_bounds->assign(out.size(), 0);
    parallel_for(0, h, [&](std::int64_t r0, std::int64_t r1) {
        for (std::int64_t y = r0; y < r1; ++y) {
            for (int x = 0; x < w; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * w + x;
                const double sx = x - flow.u[i];
                const double sy = y - flow.v[i];
                const bool ok = sx >= 0.0 && sx <= w - 1.0 && sy >= 0.0 && sy <= h - 1.0;
                if (ok) {
                    out.v[i] = bilinear_sample(prev, sx, sy);
                    if (in_bounds) (*in_bounds)[i] = 1;
                } else {
                    out.v[i] = fallback ? fallback->v[i] : 0.0;
                }
            }
        }
    });
    return out;
}

}  // namespace libra
