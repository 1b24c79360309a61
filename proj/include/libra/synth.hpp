#pragma once

#include <array>
#include <string>
#include <vector>

#include "libra/haze.hpp"
#include "libra/image.hpp"

namespace libra {

// The five per-frame modalities of one sequence. clean/depth/flow are
// inputs; hazy/trans are filled by render_sequence.
struct SequenceBundle {
    std::vector<Frame> clean;
    std::vector<ScalarField> depth;
    std::vector<FlowField> flow;  // T-1 transitions
    std::vector<Frame> hazy;
    std::vector<ScalarField> trans;
    HazeParams params;
    double fps = 5.0;
};

// Clips to the [lo_pct, hi_pct] percentiles and rescales to [0,1]; flip
// converts disparity to depth (d = 1 - d_norm). Throws DegenerateField when
// the percentile window is narrower than 1e-9.
ScalarField normalize_depth(const ScalarField& raw, double lo_pct, double hi_pct, bool flip);

// Same normalization with one percentile window pooled across the whole
// clip, so the affine rescale is identical for every frame.
std::vector<ScalarField> normalize_depth_clip(const std::vector<ScalarField>& raw,
                                              double lo_pct, double hi_pct, bool flip);

// Causal flow-guided blending: d'_1 = d_1,
// d'_t = (1-blend) d_t + blend * warp(d'_{t-1}, flow_{t-1}); out-of-bounds
// samples fall back to d_t at that pixel.
std::vector<ScalarField> temporal_smooth_depth(const std::vector<ScalarField>& depths,
                                               const std::vector<FlowField>& flows,
                                               double blend);

// Bilinear upsample followed by the standard guided filter driven by the
// guide's luminance: per-window q = a*g + b with a = cov/(var+eps), box
// windows of the given radius, coefficients averaged over overlapping
// windows.
ScalarField guided_upsample(const ScalarField& low, const Frame& guide, int radius, double eps);

// Fills trans and hazy: trans = exp(-beta*depth), hazy per Eq. of the
// scattering model, identical params for every frame.
void render_sequence(SequenceBundle& bundle, const HazeParams& params);

struct QACheck {
    std::string name;
    bool pass = false;
    std::string diagnostic;
};

struct QAReport {
    std::array<QACheck, 5> checks;
    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

struct QAThresholds {
    double theta_d = 0.02;  // depth temporal stability
    double theta_i = 0.05;  // inter-frame haze consistency headroom
};

// The five automated checks: (1) modality alignment, (2) depth temporal
// stability, (3) inter-frame haze consistency, (4) atmospheric-light
// round-trip, (5) pixel ranges. Failures are report entries, never throws.
QAReport qa_checks(const SequenceBundle& bundle, const QAThresholds& th = {});

}  // namespace libra
