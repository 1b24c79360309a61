#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "libra/fit.hpp"
#include "libra/grid.hpp"
#include "libra/image.hpp"
#include "libra/metrics.hpp"

namespace libra {

// ---- LBG1 grid container: "LBG1" magic, 1 byte kind (0 = chromatic,
// 1 = temporal), four u32 LE dims [channels, bins|T, Gh, Gw], then f32 LE
// payload in channel-major order.
enum class GridKind : std::uint8_t { Chromatic = 0, Temporal = 1 };

void write_grid(const std::string& path, const ChromaticGrid& g);
void write_grid(const std::string& path, const TemporalGrid& g);
GridKind peek_grid_kind(const std::string& path);
ChromaticGrid read_chromatic_grid(const std::string& path);
TemporalGrid read_temporal_grid(const std::string& path);

// ---- LBF1 raw field container: "LBF1" magic, 1 byte channel count (1 or
// 2), two u32 LE dims [H, W], f32 LE payload row-major with channels
// interleaved last.
void write_field(const std::string& path, const ScalarField& f);
void write_flow(const std::string& path, const FlowField& f);
ScalarField read_field(const std::string& path);
FlowField read_flow(const std::string& path);

// ---- PNG frames: accepts 8- or 16-bit gray/RGB/RGBA input, always writes
// 16-bit RGB.
Frame read_png(const std::string& path);
void write_png16(const std::string& path, const Frame& frame);

// ---- Sequence manifest: line-based "key value..." text. Repeated
// clean/depth/flow/hazy/trans keys list frame files in order; paths are
// resolved relative to the manifest location on read.
struct Manifest {
    double beta = 0.0;
    std::vector<double> a_inf;  // 1 or 3 values
    double fps = 5.0;
    bool flip_depth = false;
    double lo_pct = 1.0;
    double hi_pct = 99.0;
    double blend = 0.3;
    int gf_radius = 8;
    double gf_eps = 1e-4;
    std::vector<std::string> clean, depth, flow, hazy, trans;
};

Manifest read_manifest(const std::string& path);
void write_manifest(const std::string& path, const Manifest& m);

// ---- Fit configuration: flat key=value file. Allowed keys: lambda_id,
// lambda_sp, lambda_tm, lambda_g, lambda_lie, charbonnier_eps, step_size,
// max_iters, grad_tol, p, seed. Missing keys keep their defaults; unknown
// keys are an error.
FitConfig read_fit_config(const std::string& path);
void write_fit_config(const std::string& path, const FitConfig& c);

// ---- Reports
void write_metric_report_kv(const std::string& path, const MetricReport& rep);
void write_metric_report_csv(const std::string& path, const MetricReport& rep);
void write_trace_csv(const std::string& path, const std::vector<TraceEntry>& trace);

}  // namespace libra
