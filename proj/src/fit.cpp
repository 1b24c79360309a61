#include "libra/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "libra/metrics.hpp"
#include "libra/parallel.hpp"

namespace libra {

namespace {

// Neumaier-compensated sum; keeps the loss accurate to a few ulps so the
// finite-difference oracles are not noise-limited.
struct StableSum {
    double s = 0.0, c = 0.0;
    void add(double v) {
        const double t = s + v;
        c += std::abs(s) >= std::abs(v) ? (s - t) + v : (v - t) + s;
        s = t;
    }
    double value() const { return s + c; }
};

}  // namespace

double charbonnier(const Frame& pred, const Frame& target, double eps) {
    if (!pred.same_shape(target)) throw ShapeMismatch("charbonnier: frame shapes differ");
    if (!(eps > 0.0)) throw DomainError("charbonnier: eps must be > 0");
    const std::size_t n = pred.v.size();
    StableSum sum;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = pred.v[i] - target.v[i];
        sum.add(std::sqrt(r * r + eps * eps));
    }
    return sum.value() / static_cast<double>(n);
}

Frame recombine(const Frame& center_hr, const Frame& j_lr, const Frame& down) {
    if (!j_lr.same_shape(down)) throw ShapeMismatch("recombine: lr shapes differ");
    Frame diff(j_lr.height, j_lr.width);
    for (std::size_t i = 0; i < diff.v.size(); ++i) diff.v[i] = j_lr.v[i] - down.v[i];
    Frame out(center_hr.height, center_hr.width);
    const Frame up = bilinear_resize(diff, center_hr.height, center_hr.width);
    parallel_for(0, static_cast<std::int64_t>(out.v.size()),
                 [&](std::int64_t lo, std::int64_t hi) {
                     for (std::int64_t i = lo; i < hi; ++i) {
                         out.v[i] = clamp01(center_hr.v[i] + up.v[i]);
                     }
                 });
    return out;
}

namespace {

struct GridGrads {
    ChromaticGrid gR, gG;
    TemporalGrid gT;
};

// Adjoint of the center-aligned bilinear upsample lr -> hr: scatter each hr
// cotangent into its four source taps. Deterministic chunked accumulation.
void upsample_adjoint_plane(const double* cot, int hr_h, int hr_w, int lr_h, int lr_w,
                            double* out) {
    std::vector<ResizeTap> xt(static_cast<std::size_t>(hr_w));
    for (int x = 0; x < hr_w; ++x) xt[x] = resize_tap(x, lr_w, hr_w);

    const int chunks = std::max(1, std::min(thread_count(), hr_h));
    const std::size_t lr_size = static_cast<std::size_t>(lr_h) * lr_w;
    auto scatter = [&](int lo, int hi, double* acc) {
        for (int y = lo; y < hi; ++y) {
            const ResizeTap ty = resize_tap(y, lr_h, hr_h);
            const double* crow = cot + static_cast<std::size_t>(y) * hr_w;
            double* row0 = acc + static_cast<std::size_t>(ty.i0) * lr_w;
            double* row1 = acc + static_cast<std::size_t>(ty.i1) * lr_w;
            for (int x = 0; x < hr_w; ++x) {
                const ResizeTap& tx = xt[x];
                const double g = crow[x];
                const double gy0 = g * (1.0 - ty.w1);
                const double gy1 = g * ty.w1;
                row0[tx.i0] += gy0 * (1.0 - tx.w1);
                row0[tx.i1] += gy0 * tx.w1;
                row1[tx.i0] += gy1 * (1.0 - tx.w1);
                row1[tx.i1] += gy1 * tx.w1;
            }
        }
    };
    if (chunks == 1) {
        scatter(0, hr_h, out);
        return;
    }
    std::vector<std::vector<double>> buf(static_cast<std::size_t>(chunks));
    const int rows_per = (hr_h + chunks - 1) / chunks;
    parallel_for(0, chunks, [&](std::int64_t c0, std::int64_t c1) {
        for (std::int64_t ci = c0; ci < c1; ++ci) {
            const int lo = static_cast<int>(ci) * rows_per;
            const int hi = std::min(hr_h, lo + rows_per);
            if (lo >= hi) continue;
            buf[static_cast<std::size_t>(ci)].assign(lr_size, 0.0);
            scatter(lo, hi, buf[static_cast<std::size_t>(ci)].data());
        }
    });
    for (const auto& b : buf) {
        if (b.empty()) continue;
        for (std::size_t i = 0; i < lr_size; ++i) out[i] += b[i];
    }
}

// Caches everything in the forward path that does not depend on the grids:
// the full-resolution center frame, its p-fold downsample, and the two
// color guides.
class Pipeline {
public:
    Pipeline(const std::vector<Frame>& frames, int p) : p_(p) {
        if (frames.empty()) throw ShapeMismatch("pipeline: empty frame window");
        if (frames.size() % 2 == 0) {
            throw ShapeMismatch("pipeline: frame window length must be odd");
        }
        for (const Frame& f : frames) {
            if (!f.same_shape(frames.front())) {
                throw ShapeMismatch("pipeline: frames differ in size");
            }
        }
        if (p < 1) throw DomainError("pipeline: p must be >= 1");
        center_ = &frames[frames.size() / 2];
        if (center_->height % p != 0 || center_->width % p != 0) {
            throw ShapeMismatch("pipeline: frame dims must be divisible by p");
        }
        down_ = area_downsample(*center_, p);
        guide_r_ = down_.channel(0);
        guide_g_ = down_.channel(1);
    }

    int lr_height() const { return down_.height; }
    int lr_width() const { return down_.width; }
    const Frame& center() const { return *center_; }
    const Frame& down() const { return down_; }

    struct ForwardState {
        CoeffField fused;
        Frame j_lr;
        Frame j_full;
        std::vector<unsigned char> mask_lr;    // 1 where the lr clamp is inactive
        std::vector<unsigned char> mask_full;  // 1 where the full-res clamp is inactive
        std::int64_t clamped_lr = 0;
        std::int64_t clamped_full = 0;
    };

    ForwardState forward(const ChromaticGrid& gR, const ChromaticGrid& gG,
                         const TemporalGrid& gT) const {
        ForwardState s;
        const CoeffField cR = slice_chromatic(gR, guide_r_);
        const CoeffField cG = slice_chromatic(gG, guide_g_);
        const CoeffField cT = slice_temporal(gT, lr_height(), lr_width());
        s.fused = fuse(cR, cG, cT);

        const int lh = lr_height(), lw = lr_width();
        const std::size_t pix = static_cast<std::size_t>(lh) * lw;
        s.j_lr = Frame(lh, lw);
        s.mask_lr.assign(s.j_lr.v.size(), 1);
        std::int64_t bad = -1;
        std::int64_t clamped_lr = 0;
        for (int y = 0; y < lh; ++y) {
            for (int x = 0; x < lw; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * lw + x;
                Mat3 M;
                for (int ch = 0; ch < 9; ++ch) M.m[ch] = s.fused.c[i + ch * pix];
                const Mat3 R = Mat3::identity() - M * 0.5;
                const double det = R.det();
                if (std::abs(det) < kResolventDetTol) {
                    bad = static_cast<std::int64_t>(i);
                    break;
                }
                const Mat3 A = R.adjugate() * (1.0 / det) * (Mat3::identity() + M * 0.5);
                const Vec3 rgb{{down_.v[i], down_.v[i + pix], down_.v[i + 2 * pix]}};
                const Vec3 out = A * rgb + Vec3{{s.fused.c[i + 9 * pix], s.fused.c[i + 10 * pix],
                                                 s.fused.c[i + 11 * pix]}};
                for (int c = 0; c < 3; ++c) {
                    if (out[c] < 0.0 || out[c] > 1.0) {
                        s.j_lr.v[i + c * pix] = clamp01(out[c]);
                        s.mask_lr[i + c * pix] = 0;
                        ++clamped_lr;
                    } else {
                        s.j_lr.v[i + c * pix] = out[c];
                    }
                }
            }
            if (bad >= 0) break;
        }
        if (bad >= 0) {
            throw SingularResolvent("pipeline: singular resolvent at lr pixel (" +
                                    std::to_string(bad / lw) + ", " + std::to_string(bad % lw) +
                                    ")");
        }
        s.clamped_lr = clamped_lr;

        // j_full = clamp(I_hr + Up(j_lr - down))
        Frame diff(lh, lw);
        for (std::size_t i = 0; i < diff.v.size(); ++i) {
            diff.v[i] = s.j_lr.v[i] - down_.v[i];
        }
        const int H = center_->height, W = center_->width;
        const Frame up = p_ == 1 ? diff : bilinear_resize(diff, H, W);
        s.j_full = Frame(H, W);
        s.mask_full.assign(s.j_full.v.size(), 1);
        std::int64_t clamped_full = 0;
        for (std::size_t i = 0; i < s.j_full.v.size(); ++i) {
            const double v = center_->v[i] + up.v[i];
            if (v < 0.0 || v > 1.0) {
                s.j_full.v[i] = clamp01(v);
                s.mask_full[i] = 0;
                ++clamped_full;
            } else {
                s.j_full.v[i] = v;
            }
        }
        s.clamped_full = clamped_full;
        return s;
    }

    double data_loss(const ForwardState& s, const Frame& target, double eps) const {
        return charbonnier(s.j_full, target, eps);
    }

    // Exact gradient of the Charbonnier data term with respect to the three
    // grids. Chain: charbonnier -> recombination adjoint -> affine/Cayley
    // backward -> fuse adjoint -> splat adjoints.
    void data_grad(const ForwardState& s, const Frame& target, double eps,
                   GridGrads& grads) const {
        const int H = center_->height, W = center_->width;
        const std::size_t n_full = s.j_full.v.size();
        const double inv_n = 1.0 / static_cast<double>(n_full);

        std::vector<double> g_full(n_full);
        for (std::size_t i = 0; i < n_full; ++i) {
            if (!s.mask_full[i]) {
                g_full[i] = 0.0;
                continue;
            }
            const double r = s.j_full.v[i] - target.v[i];
            g_full[i] = r / std::sqrt(r * r + eps * eps) * inv_n;
        }

        // adjoint of Up: hr cotangent -> lr cotangent
        const int lh = lr_height(), lw = lr_width();
        std::vector<double> g_jlr;
        if (p_ == 1) {
            g_jlr = std::move(g_full);
        } else {
            g_jlr.assign(static_cast<std::size_t>(3) * lh * lw, 0.0);
            const std::size_t hr_plane = static_cast<std::size_t>(H) * W;
            const std::size_t lr_plane = static_cast<std::size_t>(lh) * lw;
            for (int c = 0; c < 3; ++c) {
                upsample_adjoint_plane(g_full.data() + c * hr_plane, H, W, lh, lw,
                                       g_jlr.data() + c * lr_plane);
            }
        }

        // affine + Cayley backward into a coefficient-field cotangent
        CoeffField ct(lh, lw);
        const std::size_t pix = static_cast<std::size_t>(lh) * lw;
        parallel_for(0, lh, [&](std::int64_t y0, std::int64_t y1) {
            for (std::int64_t y = y0; y < y1; ++y) {
                for (int x = 0; x < lw; ++x) {
                    const std::size_t i = static_cast<std::size_t>(y) * lw + x;
                    const Vec3 g{{s.mask_lr[i] ? g_jlr[i] : 0.0,
                                  s.mask_lr[i + pix] ? g_jlr[i + pix] : 0.0,
                                  s.mask_lr[i + 2 * pix] ? g_jlr[i + 2 * pix] : 0.0}};
                    ct.c[i + 9 * pix] = g[0];
                    ct.c[i + 10 * pix] = g[1];
                    ct.c[i + 11 * pix] = g[2];

                    Mat3 M;
                    for (int ch = 0; ch < 9; ++ch) M.m[ch] = s.fused.c[i + ch * pix];
                    const Mat3 R = Mat3::identity() - M * 0.5;
                    const Mat3 Rinv = R.adjugate() * (1.0 / R.det());
                    const Mat3 A = Rinv * (Mat3::identity() + M * 0.5);

                    // dL/dA = g (x) rgb^T ; dL/dM = 1/2 Rinv^T dL/dA (A+I)^T
                    const Vec3 rgb{{down_.v[i], down_.v[i + pix], down_.v[i + 2 * pix]}};
                    Mat3 gA;
                    for (int r = 0; r < 3; ++r)
                        for (int c = 0; c < 3; ++c) gA(r, c) = g[r] * rgb[c];
                    const Mat3 gM =
                        (Rinv.transposed() * gA * (A + Mat3::identity()).transposed()) * 0.5;
                    for (int ch = 0; ch < 9; ++ch) ct.c[i + ch * pix] = gM.m[ch];
                }
            }
        });

        // fuse adjoint: chromatic halves, temporal passthrough
        CoeffField ct_half(lh, lw);
        for (std::size_t i = 0; i < ct.c.size(); ++i) ct_half.c[i] = 0.5 * ct.c[i];
        splat_chromatic_adjoint(ct_half, guide_r_, grads.gR);
        splat_chromatic_adjoint(ct_half, guide_g_, grads.gG);
        splat_temporal_adjoint(ct, grads.gT);
    }

private:
    const Frame* center_;
    Frame down_;
    ScalarField guide_r_, guide_g_;
    int p_;
};

double grad_norm(const GridGrads& g) {
    double s = 0.0;
    for (double v : g.gR.c) s += v * v;
    for (double v : g.gG.c) s += v * v;
    for (double v : g.gT.c) s += v * v;
    return std::sqrt(s);
}

}  // namespace

PipelineOutput pipeline_forward(const ChromaticGrid& grid_R, const ChromaticGrid& grid_G,
                                const TemporalGrid& grid_T, const std::vector<Frame>& frames,
                                int p) {
    Pipeline pl(frames, p);
    auto s = pl.forward(grid_R, grid_G, grid_T);
    return {std::move(s.j_lr), std::move(s.j_full), s.clamped_lr, s.clamped_full};
}

FitResult fit_grids(const std::vector<Frame>& frames, const Frame& target,
                    const FitConfig& config) {
    if (!(config.step_size > 0.0)) throw DomainError("fit_grids: step_size must be > 0");
    Pipeline pl(frames, config.p);
    if (!target.same_shape(pl.center())) {
        throw ShapeMismatch("fit_grids: target and frame dims differ");
    }

    const int T = static_cast<int>(frames.size());
    const RegWeights rw = config.reg_weights();

    auto make_zero = [&]() {
        FitResult r;
        r.grid_R = ChromaticGrid(config.grid_gc, config.grid_gh, config.grid_gw);
        r.grid_G = ChromaticGrid(config.grid_gc, config.grid_gh, config.grid_gw);
        r.grid_T = TemporalGrid(T, config.grid_gh, config.grid_gw);
        return r;
    };

    struct LossParts {
        double data = 0.0;
        std::array<double, 4> per_term = {0, 0, 0, 0};
        double total = 0.0;
    };

    auto eval = [&](const FitResult& st, GridGrads* grads) {
        LossParts parts;
        auto fs = pl.forward(st.grid_R, st.grid_G, st.grid_T);
        parts.data = pl.data_loss(fs, target, config.charbonnier_eps);
        RegResult reg = lie_regularizers(st.grid_R, st.grid_G, st.grid_T, rw);
        parts.per_term = reg.per_term;
        parts.total = parts.data + config.lambda_lie * reg.value;
        if (grads) {
            grads->gR = ChromaticGrid(config.grid_gc, config.grid_gh, config.grid_gw);
            grads->gG = ChromaticGrid(config.grid_gc, config.grid_gh, config.grid_gw);
            grads->gT = TemporalGrid(T, config.grid_gh, config.grid_gw);
            pl.data_grad(fs, target, config.charbonnier_eps, *grads);
            for (std::size_t i = 0; i < grads->gR.c.size(); ++i) {
                grads->gR.c[i] += config.lambda_lie * reg.grad_R.c[i];
                grads->gG.c[i] += config.lambda_lie * reg.grad_G.c[i];
            }
            for (std::size_t i = 0; i < grads->gT.c.size(); ++i) {
                grads->gT.c[i] += config.lambda_lie * reg.grad_T.c[i];
            }
        }
        return parts;
    };

    const double initial_total = eval(make_zero(), nullptr).total;

    // Startup step probe: walk a geometric ladder downward from the largest
    // candidate, run 10 descent steps each, keep the first step whose short
    // trace descends without a >5% uptick.
    double step = config.step_size;
    if (config.auto_step) {
        bool found = false;
        for (int j = 8; j >= -8 && !found; --j) {
            const double s = config.step_size * std::ldexp(1.0, j);
            FitResult st = make_zero();
            double prev = initial_total;
            bool ok = true;
            for (int k = 0; k < 10; ++k) {
                GridGrads g;
                const LossParts parts = eval(st, &g);
                if (!std::isfinite(parts.total) || parts.total > 10.0 * initial_total ||
                    parts.total > prev * 1.05) {
                    ok = false;
                    break;
                }
                prev = parts.total;
                for (std::size_t i = 0; i < st.grid_R.c.size(); ++i) {
                    st.grid_R.c[i] -= s * g.gR.c[i];
                    st.grid_G.c[i] -= s * g.gG.c[i];
                }
                for (std::size_t i = 0; i < st.grid_T.c.size(); ++i) {
                    st.grid_T.c[i] -= s * g.gT.c[i];
                }
            }
            if (ok) {
                const double final_total = eval(st, nullptr).total;
                if (std::isfinite(final_total) && final_total <= initial_total) {
                    step = s;
                    found = true;
                }
            }
        }
        if (!found) step = config.step_size * std::ldexp(1.0, -8);
    }

    FitResult res = make_zero();
    res.step_used = step;
    GridGrads vel;
    vel.gR = ChromaticGrid(config.grid_gc, config.grid_gh, config.grid_gw);
    vel.gG = ChromaticGrid(config.grid_gc, config.grid_gh, config.grid_gw);
    vel.gT = TemporalGrid(T, config.grid_gh, config.grid_gw);

    res.trace.reserve(static_cast<std::size_t>(std::max(config.max_iters, 0)));
    for (int iter = 0; iter < config.max_iters; ++iter) {
        GridGrads g;
        const LossParts parts = eval(res, &g);
        res.trace.push_back({iter, parts.data, parts.per_term, parts.total});
        if (!std::isfinite(parts.total) || parts.total > 10.0 * initial_total) {
            throw DivergenceDetected("fit_grids: loss exceeded 10x its initial value at iter " +
                                     std::to_string(iter));
        }
        if (grad_norm(g) < config.grad_tol) break;

        const double mu = config.momentum;
        for (std::size_t i = 0; i < res.grid_R.c.size(); ++i) {
            vel.gR.c[i] = mu * vel.gR.c[i] - step * g.gR.c[i];
            vel.gG.c[i] = mu * vel.gG.c[i] - step * g.gG.c[i];
            res.grid_R.c[i] += vel.gR.c[i];
            res.grid_G.c[i] += vel.gG.c[i];
        }
        for (std::size_t i = 0; i < res.grid_T.c.size(); ++i) {
            vel.gT.c[i] = mu * vel.gT.c[i] - step * g.gT.c[i];
            res.grid_T.c[i] += vel.gT.c[i];
        }
        res.iterations = iter + 1;
    }

    auto fs = pl.forward(res.grid_R, res.grid_G, res.grid_T);
    res.final_psnr = psnr(fs.j_full, target);
    return res;
}

double numerical_gradient_check(const std::vector<Frame>& frames, const Frame& target,
                                const FitConfig& config, int num_probes) {
    Pipeline pl(frames, config.p);
    const int T = static_cast<int>(frames.size());
    const RegWeights rw = config.reg_weights();

    ChromaticGrid gR(config.grid_gc, config.grid_gh, config.grid_gw);
    ChromaticGrid gG(config.grid_gc, config.grid_gh, config.grid_gw);
    TemporalGrid gT(T, config.grid_gh, config.grid_gw);

    auto loss_at = [&](std::int64_t* clamped) {
        auto fs = pl.forward(gR, gG, gT);
        if (clamped) *clamped = fs.clamped_lr + fs.clamped_full;
        const RegResult reg = lie_regularizers(gR, gG, gT, rw);
        return pl.data_loss(fs, target, config.charbonnier_eps) + config.lambda_lie * reg.value;
    };

    GridGrads grads;
    grads.gR = ChromaticGrid(config.grid_gc, config.grid_gh, config.grid_gw);
    grads.gG = ChromaticGrid(config.grid_gc, config.grid_gh, config.grid_gw);
    grads.gT = TemporalGrid(T, config.grid_gh, config.grid_gw);
    {
        auto fs = pl.forward(gR, gG, gT);
        pl.data_grad(fs, target, config.charbonnier_eps, grads);
        const RegResult reg = lie_regularizers(gR, gG, gT, rw);
        for (std::size_t i = 0; i < grads.gR.c.size(); ++i) {
            grads.gR.c[i] += config.lambda_lie * reg.grad_R.c[i];
            grads.gG.c[i] += config.lambda_lie * reg.grad_G.c[i];
        }
        for (std::size_t i = 0; i < grads.gT.c.size(); ++i) {
            grads.gT.c[i] += config.lambda_lie * reg.grad_T.c[i];
        }
    }

    std::int64_t base_clamped = 0;
    loss_at(&base_clamped);

    Rng rng(config.seed + 0x9e3779b97f4a7c15ULL);
    const double h = 1e-5;
    double worst = 0.0;
    for (int probe = 0; probe < num_probes; ++probe) {
        const int which = rng.uniform_int(0, 2);
        std::vector<double>* buf = which == 0 ? &gR.c : (which == 1 ? &gG.c : &gT.c);
        const std::vector<double>& gbuf =
            which == 0 ? grads.gR.c : (which == 1 ? grads.gG.c : grads.gT.c);
        const std::size_t idx =
            static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(buf->size()) - 1));

        const double saved = (*buf)[idx];
        std::int64_t cp = 0, cm = 0;
        (*buf)[idx] = saved + h;
        const double lp = loss_at(&cp);
        (*buf)[idx] = saved - h;
        const double lm = loss_at(&cm);
        (*buf)[idx] = saved;

        // A probe whose interval toggles a clamp sits on a kink; skip it.
        if (cp != base_clamped || cm != base_clamped) continue;

        const double fd = (lp - lm) / (2.0 * h);
        const double an = gbuf[idx];
        // 1e-6 absolute floor keeps finite-difference round-off on
        // negligible entries from dominating the report.
        const double denom = std::max({std::abs(fd), std::abs(an), 1e-6});
        worst = std::max(worst, std::abs(fd - an) / denom);
    }
    return worst;
}

}  // namespace libra
