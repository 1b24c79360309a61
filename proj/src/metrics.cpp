#include "libra/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "libra/parallel.hpp"

namespace libra {

double psnr(const Frame& a, const Frame& b) {
    if (!a.same_shape(b)) throw ShapeMismatch("psnr: frame shapes differ");
    double se = 0.0;
    for (std::size_t i = 0; i < a.v.size(); ++i) {
        const double d = a.v[i] - b.v[i];
        se += d * d;
    }
    const double mse = se / static_cast<double>(a.v.size());
    if (mse < 1e-12) return 99.0;
    return 10.0 * std::log10(1.0 / mse);
}

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kSsimC1 = 0.01 * 0.01;  // (K1 * L)^2
constexpr double kSsimC2 = 0.03 * 0.03;  // (K2 * L)^2

std::array<double, kSsimWindow> gaussian_kernel() {
    std::array<double, kSsimWindow> k{};
    const int r = kSsimWindow / 2;
    double sum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
        const double d = i - r;
        k[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
        sum += k[i];
    }
    for (double& v : k) v /= sum;
    return k;
}

// Separable Gaussian filter, valid region only: out is (h-10) x (w-10).
std::vector<double> gauss_valid(const double* in, int h, int w,
                                const std::array<double, kSsimWindow>& k) {
    const int oh = h - kSsimWindow + 1, ow = w - kSsimWindow + 1;
    std::vector<double> tmp(static_cast<std::size_t>(h) * ow);
    for (int y = 0; y < h; ++y) {
        const double* row = in + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < kSsimWindow; ++i) s += k[i] * row[x + i];
            tmp[static_cast<std::size_t>(y) * ow + x] = s;
        }
    }
    std::vector<double> out(static_cast<std::size_t>(oh) * ow);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < kSsimWindow; ++i) {
                s += k[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
            }
            out[static_cast<std::size_t>(y) * ow + x] = s;
        }
    }
    return out;
}

double ssim_plane(const double* a, const double* b, int h, int w,
                  const std::array<double, kSsimWindow>& k) {
    const std::size_t n = static_cast<std::size_t>(h) * w;
    std::vector<double> aa(n), bb(n), ab(n);
    for (std::size_t i = 0; i < n; ++i) {
        aa[i] = a[i] * a[i];
        bb[i] = b[i] * b[i];
        ab[i] = a[i] * b[i];
    }
    const auto mu_a = gauss_valid(a, h, w, k);
    const auto mu_b = gauss_valid(b, h, w, k);
    const auto m_aa = gauss_valid(aa.data(), h, w, k);
    const auto m_bb = gauss_valid(bb.data(), h, w, k);
    const auto m_ab = gauss_valid(ab.data(), h, w, k);

    double sum = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
        const double ma = mu_a[i], mb = mu_b[i];
        const double va = m_aa[i] - ma * ma;
        const double vb = m_bb[i] - mb * mb;
        const double cov = m_ab[i] - ma * mb;
        const double num = (2.0 * ma * mb + kSsimC1) * (2.0 * cov + kSsimC2);
        const double den = (ma * ma + mb * mb + kSsimC1) * (va + vb + kSsimC2);
        sum += num / den;
    }
    return sum / static_cast<double>(mu_a.size());
}

}  // namespace

double ssim(const Frame& a, const Frame& b) {
    if (!a.same_shape(b)) throw ShapeMismatch("ssim: frame shapes differ");
    if (a.height < kSsimWindow || a.width < kSsimWindow) {
        throw TooSmall("ssim: min dim must be >= 11");
    }
    static const auto kernel = gaussian_kernel();
    double s = 0.0;
    for (int c = 0; c < 3; ++c) {
        s += ssim_plane(a.plane(c), b.plane(c), a.height, a.width, kernel);
    }
    return s / 3.0;
}

double tof(const std::vector<Frame>& frames, const std::vector<FlowField>& flows) {
    if (frames.size() < 2 || flows.size() != frames.size() - 1) {
        throw ShapeMismatch("tof: need len(flows) = len(frames) - 1 >= 1");
    }
    double acc = 0.0;
    for (std::size_t t = 1; t < frames.size(); ++t) {
        const Frame& cur = frames[t];
        const Frame& prev = frames[t - 1];
        const FlowField& fl = flows[t - 1];
        if (!cur.same_shape(prev) || cur.height != fl.height || cur.width != fl.width) {
            throw ShapeMismatch("tof: frame/flow dims differ at transition " + std::to_string(t));
        }
        const int h = cur.height, w = cur.width;
        double l1 = 0.0;
        std::int64_t valid = 0;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * w + x;
                const double sx = x - fl.u[i];
                const double sy = y - fl.v[i];
                if (sx < 0.0 || sx > w - 1.0 || sy < 0.0 || sy > h - 1.0) continue;
                ++valid;
                const double fx = std::floor(sx), fy = std::floor(sy);
                const double wx = sx - fx, wy = sy - fy;
                const int x0 = std::clamp(static_cast<int>(fx), 0, w - 1);
                const int x1 = std::clamp(static_cast<int>(fx) + 1, 0, w - 1);
                const int y0 = std::clamp(static_cast<int>(fy), 0, h - 1);
                const int y1 = std::clamp(static_cast<int>(fy) + 1, 0, h - 1);
                for (int c = 0; c < 3; ++c) {
                    const double* p = prev.plane(c);
                    const double top = p[static_cast<std::size_t>(y0) * w + x0] * (1 - wx) +
                                       p[static_cast<std::size_t>(y0) * w + x1] * wx;
                    const double bot = p[static_cast<std::size_t>(y1) * w + x0] * (1 - wx) +
                                       p[static_cast<std::size_t>(y1) * w + x1] * wx;
                    const double warped = top * (1 - wy) + bot * wy;
                    l1 += std::abs(cur.at(c, y, x) - warped);
                }
            }
        }
        if (valid > 0) acc += l1 / (3.0 * static_cast<double>(valid));
    }
    return acc / static_cast<double>(frames.size() - 1);
}

GridSimilarity grid_similarity_raw(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ShapeMismatch("grid_similarity: grid sizes differ");
    double nb = 0.0;
    for (double v : b) nb += v * v;
    if (std::sqrt(nb) < 1e-12) throw ZeroAnchor("grid_similarity: anchor grid is zero");

    double nd = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        nd += d * d;
    }

    const double n = static_cast<double>(a.size());
    const double mean_a = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mean_b = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - mean_a;
        const double db = b[i] - mean_b;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    GridSimilarity out;
    out.rel_frob = std::sqrt(nd / nb);
    out.pearson = saa > 0.0 && sbb > 0.0 ? sab / std::sqrt(saa * sbb) : 1.0;
    return out;
}

GridSimilarity grid_similarity(const ChromaticGrid& a, const ChromaticGrid& b) {
    if (a.gc != b.gc || a.gh != b.gh || a.gw != b.gw) {
        throw ShapeMismatch("grid_similarity: grid dims differ");
    }
    return grid_similarity_raw(a.c, b.c);
}

GridSimilarity grid_similarity(const TemporalGrid& a, const TemporalGrid& b) {
    if (a.t != b.t || a.gh != b.gh || a.gw != b.gw) {
        throw ShapeMismatch("grid_similarity: grid dims differ");
    }
    return grid_similarity_raw(a.c, b.c);
}

std::vector<std::array<double, kCoeffChannels>> per_bin_norms(const ChromaticGrid& grid) {
    std::vector<std::array<double, kCoeffChannels>> table(static_cast<std::size_t>(grid.gc));
    for (auto& row : table) row.fill(0.0);
    for (int ch = 0; ch < kCoeffChannels; ++ch) {
        for (int b = 0; b < grid.gc; ++b) {
            double s = 0.0;
            for (int y = 0; y < grid.gh; ++y) {
                for (int x = 0; x < grid.gw; ++x) {
                    const double v = grid.at(ch, b, y, x);
                    s += v * v;
                }
            }
            table[static_cast<std::size_t>(b)][static_cast<std::size_t>(ch)] = std::sqrt(s);
        }
    }
    return table;
}

MetricReport compute_report(const std::vector<Frame>& pred, const std::vector<Frame>& ref,
                            const std::vector<FlowField>* flows) {
    if (pred.size() != ref.size() || pred.empty()) {
        throw ShapeMismatch("compute_report: sequence lengths differ or empty");
    }
    MetricReport rep;
    rep.per_frame_psnr.reserve(pred.size());
    double ssim_sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        rep.per_frame_psnr.push_back(psnr(pred[i], ref[i]));
        ssim_sum += ssim(pred[i], ref[i]);
    }
    rep.ssim = ssim_sum / static_cast<double>(pred.size());

    const double n = static_cast<double>(rep.per_frame_psnr.size());
    rep.psnr = std::accumulate(rep.per_frame_psnr.begin(), rep.per_frame_psnr.end(), 0.0) / n;
    double var = 0.0;
    for (double v : rep.per_frame_psnr) {
        var += (v - rep.psnr) * (v - rep.psnr);
    }
    rep.sigma_psnr = std::sqrt(var / n);  // population std

    if (flows && pred.size() >= 2) rep.tof = tof(pred, *flows);
    return rep;
}

}  // namespace libra
