#include "libra/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "libra/parallel.hpp"

namespace libra {

namespace {

double percentile(std::vector<double>& sorted, double pct) {
    // Linear interpolation between closest ranks; sorted must be non-empty.
    const double rank = pct / 100.0 * (static_cast<double>(sorted.size()) - 1.0);
    const std::size_t lo = static_cast<std::size_t>(std::floor(rank));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double f = rank - static_cast<double>(lo);
    return sorted[lo] + f * (sorted[hi] - sorted[lo]);
}

ScalarField apply_window(const ScalarField& raw, double lo, double hi, bool flip) {
    ScalarField out(raw.height, raw.width);
    const double inv = 1.0 / (hi - lo);
    for (std::size_t i = 0; i < raw.v.size(); ++i) {
        const double d = clamp01((std::clamp(raw.v[i], lo, hi) - lo) * inv);
        out.v[i] = flip ? 1.0 - d : d;
    }
    return out;
}

// Box mean with edge-truncated windows (each pixel normalized by its actual
// window area). O(N) per pass via running sums.
std::vector<double> box_mean(const std::vector<double>& in, int h, int w, int r) {
    std::vector<double> tmp(in.size()), out(in.size());
    // horizontal
    for (int y = 0; y < h; ++y) {
        const double* row = in.data() + static_cast<std::size_t>(y) * w;
        double* trow = tmp.data() + static_cast<std::size_t>(y) * w;
        double s = 0.0;
        for (int x = 0; x < std::min(r + 1, w); ++x) s += row[x];
        for (int x = 0; x < w; ++x) {
            const int lo = std::max(0, x - r);
            const int hi = std::min(w - 1, x + r);
            trow[x] = s / (hi - lo + 1);
            if (x + r + 1 < w) s += row[x + r + 1];
            if (x - r >= 0) s -= row[x - r];
        }
    }
    // vertical
    std::vector<double> col(static_cast<std::size_t>(w), 0.0);
    for (int y = 0; y < std::min(r + 1, h); ++y) {
        for (int x = 0; x < w; ++x) col[x] += tmp[static_cast<std::size_t>(y) * w + x];
    }
    for (int y = 0; y < h; ++y) {
        const int lo = std::max(0, y - r);
        const int hi = std::min(h - 1, y + r);
        const double inv = 1.0 / (hi - lo + 1);
        for (int x = 0; x < w; ++x) {
            out[static_cast<std::size_t>(y) * w + x] = col[x] * inv;
        }
        if (y + r + 1 < h) {
            for (int x = 0; x < w; ++x) col[x] += tmp[static_cast<std::size_t>(y + r + 1) * w + x];
        }
        if (y - r >= 0) {
            for (int x = 0; x < w; ++x) col[x] -= tmp[static_cast<std::size_t>(y - r) * w + x];
        }
    }
    return out;
}

}  // namespace

ScalarField normalize_depth(const ScalarField& raw, double lo_pct, double hi_pct, bool flip) {
    if (!(lo_pct >= 0.0 && lo_pct < hi_pct && hi_pct <= 100.0)) {
        throw DomainError("normalize_depth: need 0 <= lo_pct < hi_pct <= 100");
    }
    std::vector<double> sorted = raw.v;
    std::sort(sorted.begin(), sorted.end());
    const double lo = percentile(sorted, lo_pct);
    const double hi = percentile(sorted, hi_pct);
    if (hi - lo < 1e-9) throw DegenerateField("normalize_depth: percentile window below 1e-9");
    return apply_window(raw, lo, hi, flip);
}

std::vector<ScalarField> normalize_depth_clip(const std::vector<ScalarField>& raw,
                                              double lo_pct, double hi_pct, bool flip) {
    if (!(lo_pct >= 0.0 && lo_pct < hi_pct && hi_pct <= 100.0)) {
        throw DomainError("normalize_depth_clip: need 0 <= lo_pct < hi_pct <= 100");
    }
    std::vector<double> pooled;
    for (const auto& f : raw) pooled.insert(pooled.end(), f.v.begin(), f.v.end());
    if (pooled.empty()) throw DegenerateField("normalize_depth_clip: empty clip");
    std::sort(pooled.begin(), pooled.end());
    const double lo = percentile(pooled, lo_pct);
    const double hi = percentile(pooled, hi_pct);
    if (hi - lo < 1e-9) {
        throw DegenerateField("normalize_depth_clip: percentile window below 1e-9");
    }
    std::vector<ScalarField> out;
    out.reserve(raw.size());
    for (const auto& f : raw) out.push_back(apply_window(f, lo, hi, flip));
    return out;
}

std::vector<ScalarField> temporal_smooth_depth(const std::vector<ScalarField>& depths,
                                               const std::vector<FlowField>& flows,
                                               double blend) {
    if (!(blend >= 0.0 && blend < 1.0)) {
        throw DomainError("temporal_smooth_depth: blend must lie in [0,1)");
    }
    if (depths.empty()) return {};
    if (flows.size() + 1 != depths.size()) {
        throw ShapeMismatch("temporal_smooth_depth: need len(flows) = len(depths) - 1");
    }
    std::vector<ScalarField> out;
    out.reserve(depths.size());
    out.push_back(depths.front());
    for (std::size_t t = 1; t < depths.size(); ++t) {
        const ScalarField& cur = depths[t];
        if (!cur.same_shape(out.back())) {
            throw ShapeMismatch("temporal_smooth_depth: depth dims differ across frames");
        }
        const ScalarField warped = warp_backward(out.back(), flows[t - 1], &cur);
        ScalarField s(cur.height, cur.width);
        for (std::size_t i = 0; i < s.v.size(); ++i) {
            s.v[i] = (1.0 - blend) * cur.v[i] + blend * warped.v[i];
        }
        out.push_back(std::move(s));
    }
    return out;
}

ScalarField guided_upsample(const ScalarField& low, const Frame& guide, int radius, double eps) {
    if (guide.height < low.height || guide.width < low.width) {
        throw ShapeMismatch("guided_upsample: guide must be at least as large as input");
    }
    if (radius < 1) throw DomainError("guided_upsample: radius must be >= 1");
    if (!(eps > 0.0)) throw DomainError("guided_upsample: eps must be > 0");

    const int h = guide.height, w = guide.width;
    const ScalarField p0 = bilinear_resize(low, h, w);

    std::vector<double> g(p0.v.size());
    const double* rp = guide.plane(0);
    const double* gp = guide.plane(1);
    const double* bp = guide.plane(2);
    for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] = 0.299 * rp[i] + 0.587 * gp[i] + 0.114 * bp[i];
    }

    std::vector<double> gg(g.size()), gpv(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        gg[i] = g[i] * g[i];
        gpv[i] = g[i] * p0.v[i];
    }
    const auto mg = box_mean(g, h, w, radius);
    const auto mp = box_mean(p0.v, h, w, radius);
    const auto mgg = box_mean(gg, h, w, radius);
    const auto mgp = box_mean(gpv, h, w, radius);

    std::vector<double> a(g.size()), b(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double var = mgg[i] - mg[i] * mg[i];
        const double cov = mgp[i] - mg[i] * mp[i];
        a[i] = cov / (var + eps);
        b[i] = mp[i] - a[i] * mg[i];
    }
    const auto ma = box_mean(a, h, w, radius);
    const auto mb = box_mean(b, h, w, radius);

    ScalarField out(h, w);
    for (std::size_t i = 0; i < g.size(); ++i) {
        out.v[i] = ma[i] * g[i] + mb[i];
    }
    return out;
}

void render_sequence(SequenceBundle& bundle, const HazeParams& params) {
    bundle.params = params;
    bundle.trans.clear();
    bundle.hazy.clear();
    bundle.trans.reserve(bundle.clean.size());
    bundle.hazy.reserve(bundle.clean.size());
    if (bundle.depth.size() != bundle.clean.size()) {
        throw ShapeMismatch("render_sequence: clean/depth frame counts differ");
    }
    for (std::size_t t = 0; t < bundle.clean.size(); ++t) {
        bundle.trans.push_back(transmission(bundle.depth[t], params.beta));
        bundle.hazy.push_back(synthesize(bundle.clean[t], bundle.trans[t], params));
    }
}

namespace {

double mean_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s / static_cast<double>(a.size());
}

bool in_range(const std::vector<double>& v, double lo, double hi, double slack) {
    for (double x : v) {
        if (x < lo - slack || x > hi + slack) return false;
    }
    return true;
}

}  // namespace

QAReport qa_checks(const SequenceBundle& bundle, const QAThresholds& th) {
    QAReport rep;
    const std::size_t T = bundle.clean.size();

    // (i) modality alignment
    {
        QACheck& c = rep.checks[0];
        c.name = "modality_alignment";
        c.pass = true;
        if (T == 0) {
            c.pass = false;
            c.diagnostic = "empty sequence";
        } else {
            const int H = bundle.clean.front().height;
            const int W = bundle.clean.front().width;
            auto complain = [&](const std::string& what) {
                c.pass = false;
                if (!c.diagnostic.empty()) c.diagnostic += "; ";
                c.diagnostic += what;
            };
            if (bundle.depth.size() != T)
                complain("depth count " + std::to_string(bundle.depth.size()) + " != " +
                         std::to_string(T));
            if (bundle.hazy.size() != T)
                complain("hazy count " + std::to_string(bundle.hazy.size()) + " != " +
                         std::to_string(T));
            if (bundle.trans.size() != T)
                complain("transmission count " + std::to_string(bundle.trans.size()) + " != " +
                         std::to_string(T));
            if (T >= 1 && bundle.flow.size() != T - 1)
                complain("flow count " + std::to_string(bundle.flow.size()) + " != " +
                         std::to_string(T - 1));
            auto check_dims = [&](int fh, int fw, const std::string& what, std::size_t idx) {
                if (fh != H || fw != W) {
                    complain(what + "[" + std::to_string(idx) + "] is " + std::to_string(fh) +
                             "x" + std::to_string(fw) + ", expected " + std::to_string(H) + "x" +
                             std::to_string(W));
                }
            };
            for (std::size_t t = 0; t < bundle.clean.size(); ++t)
                check_dims(bundle.clean[t].height, bundle.clean[t].width, "clean", t);
            for (std::size_t t = 0; t < bundle.depth.size(); ++t)
                check_dims(bundle.depth[t].height, bundle.depth[t].width, "depth", t);
            for (std::size_t t = 0; t < bundle.hazy.size(); ++t)
                check_dims(bundle.hazy[t].height, bundle.hazy[t].width, "hazy", t);
            for (std::size_t t = 0; t < bundle.trans.size(); ++t)
                check_dims(bundle.trans[t].height, bundle.trans[t].width, "transmission", t);
            for (std::size_t t = 0; t < bundle.flow.size(); ++t)
                check_dims(bundle.flow[t].height, bundle.flow[t].width, "flow", t);
        }
    }

    // (ii) depth temporal stability
    {
        QACheck& c = rep.checks[1];
        c.name = "depth_temporal_stability";
        c.pass = true;
        double worst = 0.0;
        if (bundle.flow.size() + 1 == bundle.depth.size()) {
            for (std::size_t t = 1; t < bundle.depth.size(); ++t) {
                const ScalarField warped =
                    warp_backward(bundle.depth[t - 1], bundle.flow[t - 1], &bundle.depth[t]);
                const double dev = mean_abs_diff(bundle.depth[t].v, warped.v);
                worst = std::max(worst, dev);
                if (dev > th.theta_d) {
                    c.pass = false;
                    c.diagnostic = "transition " + std::to_string(t) + ": mean dev " +
                                   std::to_string(dev) + " > " + std::to_string(th.theta_d);
                }
            }
        } else {
            c.pass = false;
            c.diagnostic = "flow count does not match depth count";
        }
        if (c.pass) c.diagnostic = "worst mean dev " + std::to_string(worst);
    }

    // (iii) inter-frame haze consistency
    {
        QACheck& c = rep.checks[2];
        c.name = "interframe_haze_consistency";
        c.pass = true;
        if (bundle.hazy.size() == T && bundle.clean.size() == T) {
            for (std::size_t t = 1; t < T; ++t) {
                const double hazy_diff = mean_abs_diff(bundle.hazy[t].v, bundle.hazy[t - 1].v);
                const double clean_diff = mean_abs_diff(bundle.clean[t].v, bundle.clean[t - 1].v);
                if (hazy_diff > th.theta_i + clean_diff) {
                    c.pass = false;
                    c.diagnostic = "transition " + std::to_string(t) + ": hazy diff " +
                                   std::to_string(hazy_diff) + " > " +
                                   std::to_string(th.theta_i + clean_diff);
                    break;
                }
            }
        } else {
            c.pass = false;
            c.diagnostic = "hazy frames missing";
        }
    }

    // (iv) atmospheric-light round-trip
    {
        QACheck& c = rep.checks[3];
        c.name = "atmospheric_light_roundtrip";
        c.pass = true;
        if (bundle.hazy.size() != T || bundle.trans.size() != T) {
            c.pass = false;
            c.diagnostic = "rendered modalities missing";
        }
        for (std::size_t t = 0; c.pass && t < T; ++t) {
            const Frame& I = bundle.hazy[t];
            const Frame& J = bundle.clean[t];
            const ScalarField& tr = bundle.trans[t];
            for (int ch = 0; ch < 3 && c.pass; ++ch) {
                std::vector<double> est;
                est.reserve(tr.v.size());
                const double* ip = I.plane(ch);
                const double* jp = J.plane(ch);
                for (std::size_t i = 0; i < tr.v.size(); ++i) {
                    if (1.0 - tr.v[i] < 0.1) continue;
                    est.push_back((ip[i] - jp[i] * tr.v[i]) / (1.0 - tr.v[i]));
                }
                if (est.empty()) continue;  // thin haze everywhere: nothing to verify
                std::sort(est.begin(), est.end());
                const double med = percentile(est, 50.0);
                const double iqr = percentile(est, 75.0) - percentile(est, 25.0);
                const double dev = std::abs(med - bundle.params.a_inf[ch]);
                if (dev > 1e-4 || iqr > 1e-3) {
                    c.pass = false;
                    c.diagnostic = "frame " + std::to_string(t) + " channel " +
                                   std::to_string(ch) + ": median dev " + std::to_string(dev) +
                                   ", IQR " + std::to_string(iqr);
                }
            }
        }
    }

    // (v) pixel range
    {
        QACheck& c = rep.checks[4];
        c.name = "pixel_range";
        c.pass = true;
        const double slack = 1e-6;
        auto complain = [&](const std::string& what, std::size_t idx) {
            c.pass = false;
            if (!c.diagnostic.empty()) c.diagnostic += "; ";
            c.diagnostic += what + "[" + std::to_string(idx) + "] out of range";
        };
        for (std::size_t t = 0; t < bundle.clean.size(); ++t)
            if (!in_range(bundle.clean[t].v, 0.0, 1.0, slack)) complain("clean", t);
        for (std::size_t t = 0; t < bundle.hazy.size(); ++t)
            if (!in_range(bundle.hazy[t].v, 0.0, 1.0, slack)) complain("hazy", t);
        for (std::size_t t = 0; t < bundle.depth.size(); ++t)
            if (!in_range(bundle.depth[t].v, 0.0, 1.0, slack)) complain("depth", t);
        for (std::size_t t = 0; t < bundle.trans.size(); ++t) {
            if (!in_range(bundle.trans[t].v, 0.0, 1.0, slack)) complain("transmission", t);
            for (double v : bundle.trans[t].v) {
                if (v <= 0.0) {
                    complain("transmission", t);
                    break;
                }
            }
        }
        const double flow_bound =
            bundle.clean.empty()
                ? 0.0
                : std::min(bundle.clean.front().height, bundle.clean.front().width);
        for (std::size_t t = 0; t < bundle.flow.size(); ++t) {
            if (!in_range(bundle.flow[t].u, -flow_bound, flow_bound, slack) ||
                !in_range(bundle.flow[t].v, -flow_bound, flow_bound, slack)) {
                complain("flow", t);
            }
        }
    }

    return rep;
}

}  // namespace libra
