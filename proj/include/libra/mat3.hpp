#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "libra/common.hpp"

namespace libra {

struct Vec3 {
    double v[3] = {0.0, 0.0, 0.0};

    double& operator[](int i) { return v[i]; }
    double operator[](int i) const { return v[i]; }

    Vec3 operator+(const Vec3& o) const { return {{v[0] + o.v[0], v[1] + o.v[1], v[2] + o.v[2]}}; }
    Vec3 operator-(const Vec3& o) const { return {{v[0] - o.v[0], v[1] - o.v[1], v[2] - o.v[2]}}; }
    Vec3 operator*(double s) const { return {{v[0] * s, v[1] * s, v[2] * s}}; }
};

// Row-major 3x3 matrix. Element (r,c) lives at m[3*r + c], matching the
// channel order of the 12-dim coefficient fields (9 matrix entries followed
// by the translation).
struct Mat3 {
    double m[9] = {0, 0, 0, 0, 0, 0, 0, 0, 0};

    static Mat3 zero() { return {}; }
    static Mat3 identity() { return {{1, 0, 0, 0, 1, 0, 0, 0, 1}}; }
    static Mat3 diag(double a, double b, double c) { return {{a, 0, 0, 0, b, 0, 0, 0, c}}; }
    // Single-entry basis matrix E_{rc} (1-based row/col would invite
    // confusion; indices here are 0-based).
    static Mat3 basis(int r, int c) {
        Mat3 e;
        e.m[3 * r + c] = 1.0;
        return e;
    }

    double& operator()(int r, int c) { return m[3 * r + c]; }
    double operator()(int r, int c) const { return m[3 * r + c]; }

    Mat3 operator+(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 9; ++i) r.m[i] = m[i] + o.m[i];
        return r;
    }
    Mat3 operator-(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 9; ++i) r.m[i] = m[i] - o.m[i];
        return r;
    }
    Mat3 operator*(double s) const {
        Mat3 r;
        for (int i = 0; i < 9; ++i) r.m[i] = m[i] * s;
        return r;
    }
    Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                r.m[3 * i + j] = m[3 * i] * o.m[j] + m[3 * i + 1] * o.m[3 + j] + m[3 * i + 2] * o.m[6 + j];
        return r;
    }
    Vec3 operator*(const Vec3& x) const {
        Vec3 r;
        for (int i = 0; i < 3; ++i)
            r[i] = m[3 * i] * x[0] + m[3 * i + 1] * x[1] + m[3 * i + 2] * x[2];
        return r;
    }

    Mat3 transposed() const {
        return {{m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]}};
    }

    double det() const {
        return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
               m[2] * (m[3] * m[7] - m[4] * m[6]);
    }

    // Adjugate (transpose of the cofactor matrix): inv = adj / det.
    Mat3 adjugate() const {
        Mat3 a;
        a.m[0] = m[4] * m[8] - m[5] * m[7];
        a.m[1] = m[2] * m[7] - m[1] * m[8];
        a.m[2] = m[1] * m[5] - m[2] * m[4];
        a.m[3] = m[5] * m[6] - m[3] * m[8];
        a.m[4] = m[0] * m[8] - m[2] * m[6];
        a.m[5] = m[2] * m[3] - m[0] * m[5];
        a.m[6] = m[3] * m[7] - m[4] * m[6];
        a.m[7] = m[1] * m[6] - m[0] * m[7];
        a.m[8] = m[0] * m[4] - m[1] * m[3];
        return a;
    }

    double frobenius() const {
        double s = 0.0;
        for (double e : m) s += e * e;
        return std::sqrt(s);
    }

    double max_abs() const {
        double s = 0.0;
        for (double e : m) s = std::max(s, std::abs(e));
        return s;
    }
};

inline Mat3 operator*(double s, const Mat3& a) { return a * s; }

// 12-dim affine coefficient c = (M, t): M lives in gl(3), t is a plain
// translation. M is NOT the transform matrix itself; the Cayley map below
// produces that.
struct AffineCoeff {
    Mat3 matrix_part;
    Vec3 translation;
};

struct AffineTransform {
    Mat3 A;
    Vec3 b;
};

inline constexpr double kResolventDetTol = 1e-9;

// Cay(M) = (I - M/2)^{-1} (I + M/2), evaluated with a closed-form adjugate
// solve. Throws SingularResolvent when |det(I - M/2)| < 1e-9.
Mat3 cayley(const Mat3& M);

// Exact differential of the Cayley map:
//   dCay = (I - M/2)^{-1} (dM/2) (Cay(M) + I).
Mat3 cayley_differential(const Mat3& M, const Mat3& dM);

// [Ma, Mb] = Ma*Mb - Mb*Ma.
Mat3 commutator(const Mat3& Ma, const Mat3& Mb);

// Frobenius distance between Cay(Mx + Mt) and Cay(Mx)*Cay(Mt); relative to
// ||Cay(Mx)*Cay(Mt)||_F unless `relative` is false.
double composition_residual(const Mat3& Mx, const Mat3& Mt, bool relative = true);

AffineTransform to_transform(const AffineCoeff& c);

// i.i.d. Gaussian entries rescaled to an exact Frobenius norm.
Mat3 random_gl3(Rng& rng, double target_frobenius);
Mat3 random_diagonal(Rng& rng, double target_frobenius);

enum class ProbePairKind { General, CommutingDiagonal };

struct SlopeProbeResult {
    double slope = 0.0;
    double intercept = 0.0;
    // (||M||_F^2, composition error) per sampled pair.
    std::vector<std::pair<double, double>> samples;
};

// Samples `num_pairs` matrix pairs at log-spaced norms in [rho_min, rho_max]
// and fits log(error) against log(||M||_F^2) by least squares. Throws
// DegenerateFit when every residual is below 1e-14 or the abscissa carries no
// spread.
SlopeProbeResult prop1_slope_probe(int num_pairs, double rho_min, double rho_max,
                                   std::uint64_t seed,
                                   ProbePairKind kind = ProbePairKind::General,
                                   bool relative = true);

}  // namespace libra
