#pragma once

#include "libra/grid.hpp"
#include "libra/image.hpp"
#include "libra/mat3.hpp"

namespace libra {

// Per-video scattering parameters, fixed across frames.
struct HazeParams {
    double beta = 1.0;
    Vec3 a_inf{{0.9, 0.9, 0.9}};

    HazeParams() = default;
    HazeParams(double beta_, double a) : beta(beta_), a_inf{{a, a, a}} {}
    HazeParams(double beta_, const Vec3& a) : beta(beta_), a_inf(a) {}
};

// t = exp(-beta * d). Depth must lie in [0,1] (1e-6 slack) and beta > 0.
ScalarField transmission(const ScalarField& depth, double beta);

// I = J*t + A_inf*(1 - t), per pixel per channel.
Frame synthesize(const Frame& clean, const ScalarField& t, const HazeParams& params);

// J = (I - A_inf)/max(t, t_floor) + A_inf, clamped to [0,1]. The exact
// affine inverse of synthesize above the floor.
Frame invert_oracle(const Frame& hazy, const ScalarField& t, const HazeParams& params,
                    double t_floor = 0.01);

// The scalar-gain inversion expressed in the coefficient parameterization:
// per pixel, M = diag(m,m,m) with m = 2(a-1)/(a+1), a = 1/max(t, t_floor),
// translation = A_inf*(1-a). apply_affine on these coefficients reproduces
// invert_oracle.
CoeffField oracle_coeffs(const ScalarField& t, const HazeParams& params, double t_floor = 0.01);

struct GradAttenResult {
    double max_dev = 0.0;       // max |grad I - t * grad J| on the mask
    double mask_fraction = 0.0; // fraction of pixels with |grad t| < 1e-6
};

// Forward-difference gradients with replicate boundary; checks the ASM
// gradient relation on constant-transmission regions.
GradAttenResult gradient_attenuation_check(const Frame& hazy, const Frame& clean,
                                           const ScalarField& t);

}  // namespace libra
