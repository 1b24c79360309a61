#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "libra/image.hpp"
#include "libra/mat3.hpp"

namespace libra {

inline constexpr int kCoeffChannels = 12;  // 9 gl(3) entries + 3 translation

// Spatial-color sub-grid, layout [12][Gc][Gh][Gw] channel-major.
struct ChromaticGrid {
    int gc = 8;
    int gh = 16;
    int gw = 16;
    std::vector<double> c;

    ChromaticGrid() : ChromaticGrid(8, 16, 16) {}
    ChromaticGrid(int gc_, int gh_, int gw_)
        : gc(gc_), gh(gh_), gw(gw_),
          c(static_cast<std::size_t>(kCoeffChannels) * gc_ * gh_ * gw_, 0.0) {}

    std::size_t idx(int ch, int b, int y, int x) const {
        return ((static_cast<std::size_t>(ch) * gc + b) * gh + y) * gw + x;
    }
    double& at(int ch, int b, int y, int x) { return c[idx(ch, b, y, x)]; }
    double at(int ch, int b, int y, int x) const { return c[idx(ch, b, y, x)]; }
    int cells() const { return gc * gh * gw; }
};

// Temporal sub-grid, layout [12][T][Gh][Gw]. T must be odd so the center
// frame sits exactly on a plane.
struct TemporalGrid {
    int t = 5;
    int gh = 16;
    int gw = 16;
    std::vector<double> c;

    TemporalGrid() : TemporalGrid(5, 16, 16) {}
    TemporalGrid(int t_, int gh_, int gw_)
        : t(t_), gh(gh_), gw(gw_),
          c(static_cast<std::size_t>(kCoeffChannels) * t_ * gh_ * gw_, 0.0) {}

    std::size_t idx(int ch, int f, int y, int x) const {
        return ((static_cast<std::size_t>(ch) * t + f) * gh + y) * gw + x;
    }
    double& at(int ch, int f, int y, int x) { return c[idx(ch, f, y, x)]; }
    double at(int ch, int f, int y, int x) const { return c[idx(ch, f, y, x)]; }
    int cells() const { return t * gh * gw; }
};

// Per-pixel 12-dim coefficients at the slicing resolution, layout [12][H][W].
struct CoeffField {
    int height = 0;
    int width = 0;
    std::vector<double> c;

    CoeffField() = default;
    CoeffField(int h, int w)
        : height(h), width(w), c(static_cast<std::size_t>(kCoeffChannels) * h * w, 0.0) {}

    std::size_t idx(int ch, int y, int x) const {
        return (static_cast<std::size_t>(ch) * height + y) * width + x;
    }
    double& at(int ch, int y, int x) { return c[idx(ch, y, x)]; }
    double at(int ch, int y, int x) const { return c[idx(ch, y, x)]; }
    std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }
    bool same_shape(const CoeffField& o) const {
        return height == o.height && width == o.width;
    }
};

// Coordinates are normalized to [-1,1] with grid-cell centers at
// (2k+1)/N - 1; out-of-range positions clamp to the boundary cell by
// default (ZeroPad drops the out-of-range tap instead).
enum class GridBoundary { Clamp, ZeroPad };

// Trilinear slice over (color, y, x) at guide coordinate c~ = 2*guide - 1.
// Output resolution follows the guide field.
CoeffField slice_chromatic(const ChromaticGrid& grid, const ScalarField& guide,
                           GridBoundary boundary = GridBoundary::Clamp);

// Same spatial interpolation with the third axis pinned to the center frame
// (tau~ = 0).
CoeffField slice_temporal(const TemporalGrid& grid, int out_h, int out_w,
                          GridBoundary boundary = GridBoundary::Clamp);

// Exact adjoints of the two slices: scatter the cotangent with the forward
// interpolation weights. Accumulate (+=) into `grad`.
void splat_chromatic_adjoint(const CoeffField& cotangent, const ScalarField& guide,
                             ChromaticGrid& grad, GridBoundary boundary = GridBoundary::Clamp);
void splat_temporal_adjoint(const CoeffField& cotangent, TemporalGrid& grad,
                            GridBoundary boundary = GridBoundary::Clamp);

// c_fused = (cR + cG)/2 + ct, per pixel per channel.
CoeffField fuse(const CoeffField& cR, const CoeffField& cG, const CoeffField& ct);

// Per pixel: A = Cay(M), out = clamp(A*rgb + b, 0, 1). Throws
// SingularResolvent with the offending pixel index. `clamped`, when given,
// receives the count of clamped output values.
Frame apply_affine(const CoeffField& coeffs, const Frame& image,
                   std::int64_t* clamped = nullptr);

struct RegWeights {
    double id = 0.01;
    double sp = 0.05;
    double tm = 0.10;
    double g = 0.02;
};

struct RegResult {
    double value = 0.0;
    // Weighted contributions: identity, spatial, temporal, guide.
    std::array<double, 4> per_term = {0, 0, 0, 0};
    ChromaticGrid grad_R, grad_G;
    TemporalGrid grad_T;
};

// Four penalties applied to the raw grids (before the Cayley map):
//   id: mean ||M||^2 over all cells of all three grids (matrix channels),
//   sp: mean squared forward difference along the two spatial grid axes,
//   tm: mean squared forward difference along the temporal axis,
//   g:  mean |G_R - G_G| over all entries.
// Per-term means keep the weights meaningful across grid sizes. Gradients
// are exact.
RegResult lie_regularizers(const ChromaticGrid& gR, const ChromaticGrid& gG,
                           const TemporalGrid& gT, const RegWeights& w);

}  // namespace libra
