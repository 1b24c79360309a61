#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "libra/fit.hpp"
#include "libra/grid.hpp"

namespace libra {

struct BenchSize {
    int height = 0;
    int width = 0;
};

struct BenchRecord {
    int height = 0;
    int width = 0;
    double fit_or_predict_time_ms = 0.0;  // fixed-budget fit step, working res
    double slice_time_ms = 0.0;           // three slices + fusion at H/p x W/p
    double apply_time_ms = 0.0;           // Cayley affine + recombination
    double total_fps = 0.0;               // 1000 / sum of the three stages
};

struct BenchOptions {
    int repeats = 5;
    int p = 4;
    int working_res = 256;      // resolution of the grid-fitting stage
    int fit_budget_iters = 30;  // descent iterations per fit step
    std::uint64_t seed = 7;
};

// Times the resolution-dependent path (slice + fuse + Cayley apply +
// recombination) at each size against fixed fitted grids, plus one
// fixed-budget fit step at the working resolution. Grid work runs at a
// constant resolution by construction, so its time should not scale with
// the output size. Median of `repeats` after one discarded warm-up.
std::vector<BenchRecord> run_bench(const std::vector<BenchSize>& sizes,
                                   const BenchOptions& opt);

void write_bench_csv(const std::string& path, const std::vector<BenchRecord>& records);

// Deterministic smooth synthetic scene shared by the bench and the
// verification suites: low-frequency clean content plus a smooth depth
// field, sampled at pixel centers of the requested resolution.
struct SyntheticScene {
    Frame clean;
    ScalarField depth;
};
SyntheticScene make_scene(int height, int width, std::uint64_t seed);

// Piecewise-constant two-plane depth variant (near plane inset in a far
// field), same clean content.
SyntheticScene make_two_plane_scene(int height, int width, std::uint64_t seed);

}  // namespace libra
