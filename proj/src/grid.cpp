#include "libra/grid.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "libra/parallel.hpp"

namespace libra {

namespace {

struct AxisTap {
    int i0, i1;
    double w0, w1;
};

// Cell-center convention: normalized coordinate r in [-1,1] lands at
// continuous cell position u = (r+1)/2 * n - 1/2.
inline AxisTap axis_tap(double u, int n, GridBoundary boundary) {
    const double f = std::floor(u);
    const int i = static_cast<int>(f);
    AxisTap t;
    t.w1 = u - f;
    t.w0 = 1.0 - t.w1;
    if (boundary == GridBoundary::Clamp) {
        t.i0 = std::clamp(i, 0, n - 1);
        t.i1 = std::clamp(i + 1, 0, n - 1);
    } else {
        t.i0 = i;
        t.i1 = i + 1;
        if (t.i0 < 0 || t.i0 >= n) {
            t.i0 = 0;
            t.w0 = 0.0;
        }
        if (t.i1 < 0 || t.i1 >= n) {
            t.i1 = 0;
            t.w1 = 0.0;
        }
    }
    return t;
}

// Output pixel j of W cells mapped into n grid cells.
inline double pixel_to_cell(int j, int out_n, int n) {
    return (j + 0.5) * static_cast<double>(n) / out_n - 0.5;
}

std::vector<AxisTap> spatial_taps(int out_n, int n, GridBoundary boundary) {
    std::vector<AxisTap> taps(static_cast<std::size_t>(out_n));
    for (int j = 0; j < out_n; ++j) taps[j] = axis_tap(pixel_to_cell(j, out_n, n), n, boundary);
    return taps;
}

}  // namespace

CoeffField slice_chromatic(const ChromaticGrid& grid, const ScalarField& guide,
                           GridBoundary boundary) {
    const int h = guide.height, w = guide.width;
    if (h < 2 || w < 2) throw ShapeMismatch("slice_chromatic: output dims must be >= 2");
    CoeffField out(h, w);

    const auto tx = spatial_taps(w, grid.gw, boundary);
    const auto ty = spatial_taps(h, grid.gh, boundary);
    const std::size_t chan_stride = static_cast<std::size_t>(grid.gc) * grid.gh * grid.gw;
    const std::size_t pix = out.pixels();
    const double* gp = grid.c.data();

    parallel_for(0, h, [&](std::int64_t r0, std::int64_t r1) {
        for (std::int64_t y = r0; y < r1; ++y) {
            const AxisTap& ay = ty[static_cast<std::size_t>(y)];
            for (int x = 0; x < w; ++x) {
                const AxisTap& ax = tx[x];
                // guide coordinate c~ = 2g-1 maps to cell position g*Gc - 1/2
                const AxisTap ac =
                    axis_tap(guide.at(static_cast<int>(y), x) * grid.gc - 0.5, grid.gc, boundary);

                std::size_t cell[8];
                double wgt[8];
                int k = 0;
                for (int bc = 0; bc < 2; ++bc) {
                    const int b = bc ? ac.i1 : ac.i0;
                    const double wb = bc ? ac.w1 : ac.w0;
                    for (int by = 0; by < 2; ++by) {
                        const int gy = by ? ay.i1 : ay.i0;
                        const double wv = wb * (by ? ay.w1 : ay.w0);
                        cell[k] = (static_cast<std::size_t>(b) * grid.gh + gy) * grid.gw + ax.i0;
                        wgt[k] = wv * ax.w0;
                        ++k;
                        cell[k] = (static_cast<std::size_t>(b) * grid.gh + gy) * grid.gw + ax.i1;
                        wgt[k] = wv * ax.w1;
                        ++k;
                    }
                }

                double* op = out.c.data() + static_cast<std::size_t>(y) * w + x;
                for (int ch = 0; ch < kCoeffChannels; ++ch) {
                    const double* base = gp + ch * chan_stride;
                    double acc = 0.0;
                    for (int q = 0; q < 8; ++q) acc += wgt[q] * base[cell[q]];
                    op[ch * pix] = acc;
                }
            }
        }
    });
    return out;
}

CoeffField slice_temporal(const TemporalGrid& grid, int out_h, int out_w,
                          GridBoundary boundary) {
    if (out_h < 2 || out_w < 2) throw ShapeMismatch("slice_temporal: output dims must be >= 2");
    CoeffField out(out_h, out_w);

    const auto tx = spatial_taps(out_w, grid.gw, boundary);
    const auto ty = spatial_taps(out_h, grid.gh, boundary);
    // tau~ = 0: continuous plane position T/2 - 1/2, exactly the middle plane
    // for odd T.
    const AxisTap at = axis_tap(grid.t / 2.0 - 0.5, grid.t, boundary);
    const std::size_t chan_stride = static_cast<std::size_t>(grid.t) * grid.gh * grid.gw;
    const std::size_t pix = out.pixels();
    const double* gp = grid.c.data();

    parallel_for(0, out_h, [&](std::int64_t r0, std::int64_t r1) {
        for (std::int64_t y = r0; y < r1; ++y) {
            const AxisTap& ay = ty[static_cast<std::size_t>(y)];
            for (int x = 0; x < out_w; ++x) {
                const AxisTap& ax = tx[x];
                std::size_t cell[8];
                double wgt[8];
                int k = 0;
                for (int tc = 0; tc < 2; ++tc) {
                    const int f = tc ? at.i1 : at.i0;
                    const double wf = tc ? at.w1 : at.w0;
                    for (int by = 0; by < 2; ++by) {
                        const int gy = by ? ay.i1 : ay.i0;
                        const double wv = wf * (by ? ay.w1 : ay.w0);
                        cell[k] = (static_cast<std::size_t>(f) * grid.gh + gy) * grid.gw + ax.i0;
                        wgt[k] = wv * ax.w0;
                        ++k;
                        cell[k] = (static_cast<std::size_t>(f) * grid.gh + gy) * grid.gw + ax.i1;
                        wgt[k] = wv * ax.w1;
                        ++k;
                    }
                }

                double* op = out.c.data() + static_cast<std::size_t>(y) * out_w + x;
                for (int ch = 0; ch < kCoeffChannels; ++ch) {
                    const double* base = gp + ch * chan_stride;
                    double acc = 0.0;
                    for (int q = 0; q < 8; ++q) acc += wgt[q] * base[cell[q]];
                    op[ch * pix] = acc;
                }
            }
        }
    });
    return out;
}

namespace {

// Deterministic parallel scatter: each chunk accumulates into its own
// grid-sized buffer, merged in chunk order. Results agree across runs for a
// fixed thread count.
template <typename ScatterRows>
void scatter_rows(int h, std::size_t grid_size, std::vector<double>& grad,
                  const ScatterRows& body) {
    const int chunks = std::max(1, std::min(thread_count(), h));
    if (chunks == 1) {
        body(0, h, grad.data());
        return;
    }
    std::vector<std::vector<double>> buf(static_cast<std::size_t>(chunks));
    const int rows_per = (h + chunks - 1) / chunks;
    parallel_for(0, chunks, [&](std::int64_t c0, std::int64_t c1) {
        for (std::int64_t ci = c0; ci < c1; ++ci) {
            const int lo = static_cast<int>(ci) * rows_per;
            const int hi = std::min(h, lo + rows_per);
            if (lo >= hi) continue;
            buf[static_cast<std::size_t>(ci)].assign(grid_size, 0.0);
            body(lo, hi, buf[static_cast<std::size_t>(ci)].data());
        }
    });
    for (const auto& b : buf) {
        if (b.empty()) continue;
        for (std::size_t i = 0; i < grid_size; ++i) grad[i] += b[i];
    }
}

}  // namespace

void splat_chromatic_adjoint(const CoeffField& cotangent, const ScalarField& guide,
                             ChromaticGrid& grad, GridBoundary boundary) {
    if (cotangent.height != guide.height || cotangent.width != guide.width) {
        throw ShapeMismatch("splat_chromatic_adjoint: cotangent and guide dims differ");
    }
    const int h = cotangent.height, w = cotangent.width;
    const auto tx = spatial_taps(w, grad.gw, boundary);
    const auto ty = spatial_taps(h, grad.gh, boundary);
    const std::size_t chan_stride = static_cast<std::size_t>(grad.gc) * grad.gh * grad.gw;
    const std::size_t pix = cotangent.pixels();

    scatter_rows(h, grad.c.size(), grad.c, [&](int lo, int hi, double* acc) {
        for (int y = lo; y < hi; ++y) {
            const AxisTap& ay = ty[static_cast<std::size_t>(y)];
            for (int x = 0; x < w; ++x) {
                const AxisTap& ax = tx[x];
                const AxisTap ac = axis_tap(guide.at(y, x) * grad.gc - 0.5, grad.gc, boundary);
                std::size_t cell[8];
                double wgt[8];
                int k = 0;
                for (int bc = 0; bc < 2; ++bc) {
                    const int b = bc ? ac.i1 : ac.i0;
                    const double wb = bc ? ac.w1 : ac.w0;
                    for (int by = 0; by < 2; ++by) {
                        const int gy = by ? ay.i1 : ay.i0;
                        const double wv = wb * (by ? ay.w1 : ay.w0);
                        cell[k] = (static_cast<std::size_t>(b) * grad.gh + gy) * grad.gw + ax.i0;
                        wgt[k] = wv * ax.w0;
                        ++k;
                        cell[k] = (static_cast<std::size_t>(b) * grad.gh + gy) * grad.gw + ax.i1;
                        wgt[k] = wv * ax.w1;
                        ++k;
                    }
                }
                const double* cp = cotangent.c.data() + static_cast<std::size_t>(y) * w + x;
                for (int ch = 0; ch < kCoeffChannels; ++ch) {
                    const double cv = cp[ch * pix];
                    double* base = acc + ch * chan_stride;
                    for (int q = 0; q < 8; ++q) base[cell[q]] += wgt[q] * cv;
                }
            }
        }
    });
}

void splat_temporal_adjoint(const CoeffField& cotangent, TemporalGrid& grad,
                            GridBoundary boundary) {
    const int h = cotangent.height, w = cotangent.width;
    const auto tx = spatial_taps(w, grad.gw, boundary);
    const auto ty = spatial_taps(h, grad.gh, boundary);
    const AxisTap at = axis_tap(grad.t / 2.0 - 0.5, grad.t, boundary);
    const std::size_t chan_stride = static_cast<std::size_t>(grad.t) * grad.gh * grad.gw;
    const std::size_t pix = cotangent.pixels();

    scatter_rows(h, grad.c.size(), grad.c, [&](int lo, int hi, double* acc) {
        for (int y = lo; y < hi; ++y) {
            const AxisTap& ay = ty[static_cast<std::size_t>(y)];
            for (int x = 0; x < w; ++x) {
                const AxisTap& ax = tx[x];
                std::size_t cell[8];
                double wgt[8];
                int k = 0;
                for (int tc = 0; tc < 2; ++tc) {
                    const int f = tc ? at.i1 : at.i0;
                    const double wf = tc ? at.w1 : at.w0;
                    for (int by = 0; by < 2; ++by) {
                        const int gy = by ? ay.i1 : ay.i0;
                        const double wv = wf * (by ? ay.w1 : ay.w0);
                        cell[k] = (static_cast<std::size_t>(f) * grad.gh + gy) * grad.gw + ax.i0;
                        wgt[k] = wv * ax.w0;
                        ++k;
                        cell[k] = (static_cast<std::size_t>(f) * grad.gh + gy) * grad.gw + ax.i1;
                        wgt[k] = wv * ax.w1;
                        ++k;
                    }
                }
                const double* cp = cotangent.c.data() + static_cast<std::size_t>(y) * w + x;
                for (int ch = 0; ch < kCoeffChannels; ++ch) {
                    const double cv = cp[ch * pix];
                    double* base = acc + ch * chan_stride;
                    for (int q = 0; q < 8; ++q) base[cell[q]] += wgt[q] * cv;
                }
            }
        }
    });
}

CoeffField fuse(const CoeffField& cR, const CoeffField& cG, const CoeffField& ct) {
    if (!cR.same_shape(cG) || !cR.same_shape(ct)) {
        throw ShapeMismatch("fuse: coefficient field shapes differ");
    }
    CoeffField out(cR.height, cR.width);
    const std::size_t n = out.c.size();
    parallel_for(0, static_cast<std::int64_t>(n), [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t i = lo; i < hi; ++i) {
            out.c[i] = 0.5 * (cR.c[i] + cG.c[i]) + ct.c[i];
        }
    });
    return out;
}

Frame apply_affine(const CoeffField& coeffs, const Frame& image, std::int64_t* clamped) {
    if (coeffs.height != image.height || coeffs.width != image.width) {
        throw ShapeMismatch("apply_affine: coefficient and image dims differ");
    }
    const int h = image.height, w = image.width;
    const std::size_t pix = image.pixels();
    Frame out(h, w);

    std::atomic<std::int64_t> n_clamped{0};
    std::atomic<std::int64_t> bad_pixel{-1};

    const double* cc = coeffs.c.data();
    const double* r_in = image.plane(0);
    const double* g_in = image.plane(1);
    const double* b_in = image.plane(2);
    double* r_out = out.plane(0);
    double* g_out = out.plane(1);
    double* b_out = out.plane(2);

    parallel_for(0, h, [&](std::int64_t y0, std::int64_t y1) {
        std::int64_t local_clamped = 0;
        for (std::int64_t y = y0; y < y1; ++y) {
            for (int x = 0; x < w; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * w + x;
                // resolvent R = I - M/2, solved in closed form
                const double r00 = 1.0 - 0.5 * cc[i];
                const double r01 = -0.5 * cc[i + pix];
                const double r02 = -0.5 * cc[i + 2 * pix];
                const double r10 = -0.5 * cc[i + 3 * pix];
                const double r11 = 1.0 - 0.5 * cc[i + 4 * pix];
                const double r12 = -0.5 * cc[i + 5 * pix];
                const double r20 = -0.5 * cc[i + 6 * pix];
                const double r21 = -0.5 * cc[i + 7 * pix];
                const double r22 = 1.0 - 0.5 * cc[i + 8 * pix];

                const double c00 = r11 * r22 - r12 * r21;
                const double c01 = r02 * r21 - r01 * r22;
                const double c02 = r01 * r12 - r02 * r11;
                const double det = r00 * c00 + r10 * c01 + r20 * c02;
                if (std::abs(det) < kResolventDetTol) {
                    std::int64_t expect = -1;
                    bad_pixel.compare_exchange_strong(expect, static_cast<std::int64_t>(i));
                    continue;
                }
                const double inv_det = 1.0 / det;

                // out = R^{-1} (I + M/2) rgb + b, with (I + M/2) = 2I - R
                const double px = r_in[i], py = g_in[i], pz = b_in[i];
                const double sx = 2.0 * px - (r00 * px + r01 * py + r02 * pz);
                const double sy = 2.0 * py - (r10 * px + r11 * py + r12 * pz);
                const double sz = 2.0 * pz - (r20 * px + r21 * py + r22 * pz);

                // adjugate rows (c0*, c1*, c2* are the remaining cofactors)
                const double c10 = r12 * r20 - r10 * r22;
                const double c11 = r00 * r22 - r02 * r20;
                const double c12 = r02 * r10 - r00 * r12;
                const double c20 = r10 * r21 - r11 * r20;
                const double c21 = r01 * r20 - r00 * r21;
                const double c22 = r00 * r11 - r01 * r10;

                double ox = (c00 * sx + c01 * sy + c02 * sz) * inv_det + cc[i + 9 * pix];
                double oy = (c10 * sx + c11 * sy + c12 * sz) * inv_det + cc[i + 10 * pix];
                double oz = (c20 * sx + c21 * sy + c22 * sz) * inv_det + cc[i + 11 * pix];

                if (ox < 0.0 || ox > 1.0) {
                    ox = clamp01(ox);
                    ++local_clamped;
                }
                if (oy < 0.0 || oy > 1.0) {
                    oy = clamp01(oy);
                    ++local_clamped;
                }
                if (oz < 0.0 || oz > 1.0) {
                    oz = clamp01(oz);
                    ++local_clamped;
                }
                r_out[i] = ox;
                g_out[i] = oy;
                b_out[i] = oz;
            }
        }
        n_clamped.fetch_add(local_clamped, std::memory_order_relaxed);
    });

    if (bad_pixel.load() >= 0) {
        const std::int64_t i = bad_pixel.load();
        throw SingularResolvent("apply_affine: singular resolvent at pixel (" +
                                std::to_string(i / w) + ", " + std::to_string(i % w) + ")");
    }
    if (clamped) *clamped = n_clamped.load();
    return out;
}

RegResult lie_regularizers(const ChromaticGrid& gR, const ChromaticGrid& gG,
                           const TemporalGrid& gT, const RegWeights& w) {
    if (gR.gc != gG.gc || gR.gh != gG.gh || gR.gw != gG.gw) {
        throw ShapeMismatch("lie_regularizers: chromatic grid shapes differ");
    }
    RegResult res;
    res.grad_R = ChromaticGrid(gR.gc, gR.gh, gR.gw);
    res.grad_G = ChromaticGrid(gG.gc, gG.gh, gG.gw);
    res.grad_T = TemporalGrid(gT.t, gT.gh, gT.gw);

    // --- identity prior: matrix channels of all three grids
    const double n_id = 2.0 * gR.cells() + gT.cells();
    double id_sum = 0.0;
    auto id_accum = [&](const std::vector<double>& c, std::vector<double>& grad,
                        std::size_t cells) {
        for (std::size_t k = 0; k < 9 * cells; ++k) {
            id_sum += c[k] * c[k];
            grad[k] += w.id * 2.0 * c[k] / n_id;
        }
    };
    id_accum(gR.c, res.grad_R.c, static_cast<std::size_t>(gR.cells()));
    id_accum(gG.c, res.grad_G.c, static_cast<std::size_t>(gG.cells()));
    id_accum(gT.c, res.grad_T.c, static_cast<std::size_t>(gT.cells()));
    res.per_term[0] = w.id * id_sum / n_id;

    // --- spatial smoothness: forward differences along x and y
    const auto plane_diffs = [](int gh, int gw) {
        return static_cast<double>(gh) * (gw - 1) + static_cast<double>(gh - 1) * gw;
    };
    const double n_sp = kCoeffChannels * (2.0 * gR.gc * plane_diffs(gR.gh, gR.gw) +
                                          gT.t * plane_diffs(gT.gh, gT.gw));
    double sp_sum = 0.0;
    auto sp_accum = [&](const std::vector<double>& c, std::vector<double>& grad, int planes,
                        int gh, int gw) {
        const std::size_t plane_sz = static_cast<std::size_t>(gh) * gw;
        for (int ch = 0; ch < kCoeffChannels; ++ch) {
            for (int p = 0; p < planes; ++p) {
                const std::size_t base = (static_cast<std::size_t>(ch) * planes + p) * plane_sz;
                for (int y = 0; y < gh; ++y) {
                    for (int x = 0; x < gw; ++x) {
                        const std::size_t i = base + static_cast<std::size_t>(y) * gw + x;
                        if (x + 1 < gw) {
                            const double d = c[i + 1] - c[i];
                            sp_sum += d * d;
                            grad[i + 1] += w.sp * 2.0 * d / n_sp;
                            grad[i] -= w.sp * 2.0 * d / n_sp;
                        }
                        if (y + 1 < gh) {
                            const double d = c[i + gw] - c[i];
                            sp_sum += d * d;
                            grad[i + gw] += w.sp * 2.0 * d / n_sp;
                            grad[i] -= w.sp * 2.0 * d / n_sp;
                        }
                    }
                }
            }
        }
    };
    sp_accum(gR.c, res.grad_R.c, gR.gc, gR.gh, gR.gw);
    sp_accum(gG.c, res.grad_G.c, gG.gc, gG.gh, gG.gw);
    sp_accum(gT.c, res.grad_T.c, gT.t, gT.gh, gT.gw);
    res.per_term[1] = w.sp * sp_sum / n_sp;

    // --- temporal smoothness: forward differences along tau
    double tm_sum = 0.0;
    if (gT.t > 1) {
        const double n_tm =
            static_cast<double>(kCoeffChannels) * (gT.t - 1) * gT.gh * gT.gw;
        const std::size_t plane_sz = static_cast<std::size_t>(gT.gh) * gT.gw;
        for (int ch = 0; ch < kCoeffChannels; ++ch) {
            for (int f = 0; f + 1 < gT.t; ++f) {
                const std::size_t b0 = (static_cast<std::size_t>(ch) * gT.t + f) * plane_sz;
                for (std::size_t i = 0; i < plane_sz; ++i) {
                    const double d = gT.c[b0 + plane_sz + i] - gT.c[b0 + i];
                    tm_sum += d * d;
                    res.grad_T.c[b0 + plane_sz + i] += w.tm * 2.0 * d / n_tm;
                    res.grad_T.c[b0 + i] -= w.tm * 2.0 * d / n_tm;
                }
            }
        }
        res.per_term[2] = w.tm * tm_sum / n_tm;
    }

    // --- guide consistency: L1 between the two chromatic grids
    const double n_g = static_cast<double>(gR.c.size());
    double g_sum = 0.0;
    for (std::size_t i = 0; i < gR.c.size(); ++i) {
        const double d = gR.c[i] - gG.c[i];
        g_sum += std::abs(d);
        const double s = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
        res.grad_R.c[i] += w.g * s / n_g;
        res.grad_G.c[i] -= w.g * s / n_g;
    }
    res.per_term[3] = w.g * g_sum / n_g;

    res.value = res.per_term[0] + res.per_term[1] + res.per_term[2] + res.per_term[3];
    return res;
}

}  // namespace libra
