#include "libra/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include "libra/haze.hpp"

namespace libra {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// Sum of a few low-frequency sinusoids of the continuous unit square,
// bounded by the sum of amplitudes.
struct Wavelet {
    double fx, fy, phase, amp;
};

std::vector<Wavelet> make_waves(Rng& rng, int count, double total_amp) {
    std::vector<Wavelet> waves(static_cast<std::size_t>(count));
    double norm = 0.0;
    for (auto& w : waves) {
        w.fx = rng.uniform(0.5, 3.0);
        w.fy = rng.uniform(0.5, 3.0);
        w.phase = rng.uniform(0.0, 2.0 * M_PI);
        w.amp = rng.uniform(0.3, 1.0);
        norm += w.amp;
    }
    for (auto& w : waves) w.amp *= total_amp / norm;
    return waves;
}

double eval_waves(const std::vector<Wavelet>& waves, double u, double v) {
    double s = 0.0;
    for (const auto& w : waves) {
        s += w.amp * std::sin(2.0 * M_PI * (w.fx * u + w.fy * v) + w.phase);
    }
    return s;
}

}  // namespace

SyntheticScene make_scene(int height, int width, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<Wavelet>> chan_waves;
    for (int c = 0; c < 3; ++c) chan_waves.push_back(make_waves(rng, 4, 0.32));
    const auto depth_waves = make_waves(rng, 3, 0.38);

    SyntheticScene s;
    s.clean = Frame(height, width);
    s.depth = ScalarField(height, width);
    for (int y = 0; y < height; ++y) {
        const double v = (y + 0.5) / height;
        for (int x = 0; x < width; ++x) {
            const double u = (x + 0.5) / width;
            for (int c = 0; c < 3; ++c) {
                s.clean.at(c, y, x) = 0.5 + eval_waves(chan_waves[static_cast<std::size_t>(c)], u, v);
            }
            s.depth.at(y, x) = 0.52 + eval_waves(depth_waves, u, v);
        }
    }
    return s;
}

SyntheticScene make_two_plane_scene(int height, int width, std::uint64_t seed) {
    SyntheticScene s = make_scene(height, width, seed);
    // near plane: centered square covering 1/4 of the area
    for (int y = 0; y < height; ++y) {
        const double v = (y + 0.5) / height;
        for (int x = 0; x < width; ++x) {
            const double u = (x + 0.5) / width;
            const bool near = u > 0.25 && u < 0.75 && v > 0.25 && v < 0.75;
            s.depth.at(y, x) = near ? 0.25 : 0.85;
        }
    }
    return s;
}

namespace {

// Median of timed samples; each sample averages `inner` calls so short
// stages are not clock-noise limited.
template <typename F>
double time_stage_ms(int repeats, const F& fn) {
    fn();  // warm-up, discarded
    const auto probe0 = Clock::now();
    fn();
    const double rough = std::max(ms_since(probe0), 1e-3);
    const int inner = std::clamp(static_cast<int>(std::ceil(10.0 / rough)), 1, 64);

    std::vector<double> samples;
    samples.reserve(static_cast<std::size_t>(repeats));
    for (int r = 0; r < repeats; ++r) {
        const auto t0 = Clock::now();
        for (int k = 0; k < inner; ++k) fn();
        samples.push_back(ms_since(t0) / inner);
    }
    std::sort(samples.begin(), samples.end());
    return samples[samples.size() / 2];
}

}  // namespace

std::vector<BenchRecord> run_bench(const std::vector<BenchSize>& sizes, const BenchOptions& opt) {
    if (opt.repeats < 3) throw DomainError("run_bench: repeats must be >= 3");
    for (std::size_t i = 1; i < sizes.size(); ++i) {
        const std::int64_t prev = static_cast<std::int64_t>(sizes[i - 1].height) * sizes[i - 1].width;
        const std::int64_t cur = static_cast<std::int64_t>(sizes[i].height) * sizes[i].width;
        if (cur < prev) throw DomainError("run_bench: sizes must be sorted by pixel count");
    }

    const HazeParams params(1.1, 0.82);

    // Fixed grids: fit once on the working-resolution scene.
    const int wr = opt.working_res;
    SyntheticScene ws = make_scene(wr, wr, opt.seed);
    const ScalarField wt = transmission(ws.depth, params.beta);
    const Frame whazy = synthesize(ws.clean, wt, params);
    const std::vector<Frame> wframes(5, whazy);

    FitConfig fit_cfg;
    fit_cfg.max_iters = 150;
    fit_cfg.p = opt.p;
    fit_cfg.seed = opt.seed;
    const FitResult fitted = fit_grids(wframes, ws.clean, fit_cfg);

    // Per-frame grid work at fixed working resolution: a fixed budget of
    // descent iterations, independent of the native size by construction.
    FitConfig step_cfg = fit_cfg;
    step_cfg.max_iters = opt.fit_budget_iters;
    step_cfg.auto_step = false;
    step_cfg.step_size = fitted.step_used;

    std::vector<BenchRecord> out;
    out.reserve(sizes.size());
    for (const BenchSize& sz : sizes) {
        if (sz.height % opt.p != 0 || sz.width % opt.p != 0) {
            throw DomainError("run_bench: size not divisible by p");
        }
        BenchRecord rec;
        rec.height = sz.height;
        rec.width = sz.width;

        // native-resolution hazy frame (ingest, untimed)
        Frame hazy;
        {
            SyntheticScene scene = make_scene(sz.height, sz.width, opt.seed);
            const ScalarField t = transmission(scene.depth, params.beta);
            hazy = synthesize(scene.clean, t, params);
        }
        const Frame down = area_downsample(hazy, opt.p);
        const ScalarField guide_r = down.channel(0);
        const ScalarField guide_g = down.channel(1);

        rec.fit_or_predict_time_ms = time_stage_ms(opt.repeats, [&] {
            fit_grids(wframes, ws.clean, step_cfg);
        });

        CoeffField fused;
        rec.slice_time_ms = time_stage_ms(opt.repeats, [&] {
            const CoeffField cR = slice_chromatic(fitted.grid_R, guide_r);
            const CoeffField cG = slice_chromatic(fitted.grid_G, guide_g);
            const CoeffField cT = slice_temporal(fitted.grid_T, down.height, down.width);
            fused = fuse(cR, cG, cT);
        });

        rec.apply_time_ms = time_stage_ms(opt.repeats, [&] {
            const Frame j_lr = apply_affine(fused, down);
            const Frame j_full = recombine(hazy, j_lr, down);
            (void)j_full;
        });

        rec.total_fps =
            1000.0 / (rec.fit_or_predict_time_ms + rec.slice_time_ms + rec.apply_time_ms);
        out.push_back(rec);
    }
    return out;
}

void write_bench_csv(const std::string& path, const std::vector<BenchRecord>& records) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open bench csv for writing: " + path);
    os.precision(9);
    os << "height,width,pixels,fit_or_predict_time_ms,slice_time_ms,apply_time_ms,total_fps\n";
    for (const auto& r : records) {
        os << r.height << "," << r.width << ","
           << static_cast<std::int64_t>(r.height) * r.width << "," << r.fit_or_predict_time_ms
           << "," << r.slice_time_ms << "," << r.apply_time_ms << "," << r.total_fps << "\n";
    }
    if (!os) throw IoError("bench csv write failed: " + path);
}

}  // namespace libra
