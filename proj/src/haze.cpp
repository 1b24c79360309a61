#include "libra/haze.hpp"

#include <cmath>

#include "libra/parallel.hpp"

namespace libra {

ScalarField transmission(const ScalarField& depth, double beta) {
    if (!(beta > 0.0)) throw DomainError("transmission: beta must be > 0");
    for (double d : depth.v) {
        if (d < -1e-6 || d > 1.0 + 1e-6) {
            throw DomainError("transmission: depth outside [0,1]");
        }
    }
    ScalarField t(depth.height, depth.width);
    parallel_for(0, depth.height, [&](std::int64_t r0, std::int64_t r1) {
        const std::size_t lo = static_cast<std::size_t>(r0) * depth.width;
        const std::size_t hi = static_cast<std::size_t>(r1) * depth.width;
        for (std::size_t i = lo; i < hi; ++i) t.v[i] = std::exp(-beta * depth.v[i]);
    });
    return t;
}

Frame synthesize(const Frame& clean, const ScalarField& t, const HazeParams& params) {
    if (clean.height != t.height || clean.width != t.width) {
        throw ShapeMismatch("synthesize: frame and transmission dims differ");
    }
    Frame out(clean.height, clean.width);
    parallel_for(0, clean.height, [&](std::int64_t r0, std::int64_t r1) {
        for (int c = 0; c < 3; ++c) {
            const double a = params.a_inf[c];
            const double* jp = clean.plane(c);
            double* ip = out.plane(c);
            const std::size_t lo = static_cast<std::size_t>(r0) * clean.width;
            const std::size_t hi = static_cast<std::size_t>(r1) * clean.width;
            for (std::size_t i = lo; i < hi; ++i) {
                ip[i] = jp[i] * t.v[i] + a * (1.0 - t.v[i]);
            }
        }
    });
    return out;
}

Frame invert_oracle(const Frame& hazy, const ScalarField& t, const HazeParams& params,
                    double t_floor) {
    if (hazy.height != t.height || hazy.width != t.width) {
        throw ShapeMismatch("invert_oracle: frame and transmission dims differ");
    }
    if (!(t_floor > 0.0) || t_floor > 0.2) {
        throw DomainError("invert_oracle: t_floor must lie in (0, 0.2]");
    }
    Frame out(hazy.height, hazy.width);
    parallel_for(0, hazy.height, [&](std::int64_t r0, std::int64_t r1) {
        for (int c = 0; c < 3; ++c) {
            const double a_c = params.a_inf[c];
            const double* ip = hazy.plane(c);
            double* jp = out.plane(c);
            const std::size_t lo = static_cast<std::size_t>(r0) * hazy.width;
            const std::size_t hi = static_cast<std::size_t>(r1) * hazy.width;
            for (std::size_t i = lo; i < hi; ++i) {
                const double tv = std::max(t.v[i], t_floor);
                jp[i] = clamp01((ip[i] - a_c) / tv + a_c);
            }
        }
    });
    return out;
}

CoeffField oracle_coeffs(const ScalarField& t, const HazeParams& params, double t_floor) {
    if (!(t_floor > 0.0) || t_floor > 0.2) {
        throw DomainError("oracle_coeffs: t_floor must lie in (0, 0.2]");
    }
    CoeffField out(t.height, t.width);
    const std::size_t pix = out.pixels();
    double* cc = out.c.data();
    parallel_for(0, t.height, [&](std::int64_t r0, std::int64_t r1) {
        const std::size_t lo = static_cast<std::size_t>(r0) * t.width;
        const std::size_t hi = static_cast<std::size_t>(r1) * t.width;
        for (std::size_t i = lo; i < hi; ++i) {
            const double a = 1.0 / std::max(t.v[i], t_floor);
            if (!(a > 0.0)) throw DomainError("oracle_coeffs: nonpositive gain");
            const double m = 2.0 * (a - 1.0) / (a + 1.0);
            cc[i] = m;             // M(0,0)
            cc[i + 4 * pix] = m;   // M(1,1)
            cc[i + 8 * pix] = m;   // M(2,2)
            for (int c = 0; c < 3; ++c) {
                cc[i + (9 + c) * pix] = params.a_inf[c] * (1.0 - a);
            }
        }
    });
    return out;
}

GradAttenResult gradient_attenuation_check(const Frame& hazy, const Frame& clean,
                                           const ScalarField& t) {
    if (!hazy.same_shape(clean) || hazy.height != t.height || hazy.width != t.width) {
        throw ShapeMismatch("gradient_attenuation_check: input dims differ");
    }
    const int h = hazy.height, w = hazy.width;

    // Forward differences with replicate boundary (last row/col diff = 0).
    auto dx = [&](const double* p, int y, int x) {
        return x + 1 < w ? p[static_cast<std::size_t>(y) * w + x + 1] -
                               p[static_cast<std::size_t>(y) * w + x]
                         : 0.0;
    };
    auto dy = [&](const double* p, int y, int x) {
        return y + 1 < h ? p[(static_cast<std::size_t>(y) + 1) * w + x] -
                               p[static_cast<std::size_t>(y) * w + x]
                         : 0.0;
    };

    double max_dev = 0.0;
    std::int64_t masked = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double tdx = dx(t.v.data(), y, x);
            const double tdy = dy(t.v.data(), y, x);
            if (std::abs(tdx) >= 1e-6 || std::abs(tdy) >= 1e-6) continue;
            ++masked;
            const double tv = t.at(y, x);
            for (int c = 0; c < 3; ++c) {
                const double* ip = hazy.plane(c);
                const double* jp = clean.plane(c);
                max_dev = std::max(max_dev, std::abs(dx(ip, y, x) - tv * dx(jp, y, x)));
                max_dev = std::max(max_dev, std::abs(dy(ip, y, x) - tv * dy(jp, y, x)));
            }
        }
    }
    if (masked == 0) throw EmptyMask("gradient_attenuation_check: no constant-t pixels");
    return {max_dev, static_cast<double>(masked) / (static_cast<double>(h) * w)};
}

}  // namespace libra
