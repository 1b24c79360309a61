#include "libra/mat3.hpp"

#include <cmath>

namespace libra {

namespace {

// Resolvent R = I - M/2 and its inverse via adjugate. Shared by the map and
// its differential.
Mat3 resolvent_inverse(const Mat3& M) {
    Mat3 r = Mat3::identity() - M * 0.5;
    const double d = r.det();
    if (std::abs(d) < kResolventDetTol) {
        throw SingularResolvent("cayley: |det(I - M/2)| = " + std::to_string(std::abs(d)) +
                                " below 1e-9");
    }
    return r.adjugate() * (1.0 / d);
}

}  // namespace

Mat3 cayley(const Mat3& M) {
    return resolvent_inverse(M) * (Mat3::identity() + M * 0.5);
}

Mat3 cayley_differential(const Mat3& M, const Mat3& dM) {
    const Mat3 rinv = resolvent_inverse(M);
    const Mat3 cay = rinv * (Mat3::identity() + M * 0.5);
    return rinv * (dM * 0.5) * (cay + Mat3::identity());
}

Mat3 commutator(const Mat3& Ma, const Mat3& Mb) { return Ma * Mb - Mb * Ma; }

double composition_residual(const Mat3& Mx, const Mat3& Mt, bool relative) {
    const Mat3 lhs = cayley(Mx + Mt);
    const Mat3 rhs = cayley(Mx) * cayley(Mt);
    const double dist = (lhs - rhs).frobenius();
    if (!relative) return dist;
    return dist / rhs.frobenius();
}

AffineTransform to_transform(const AffineCoeff& c) {
    return {cayley(c.matrix_part), c.translation};
}

Mat3 random_gl3(Rng& rng, double target_frobenius) {
    Mat3 m;
    double norm2 = 0.0;
    do {
        for (double& e : m.m) {
            e = rng.normal();
        }
        norm2 = 0.0;
        for (double e : m.m) norm2 += e * e;
    } while (norm2 == 0.0);
    const double s = target_frobenius / std::sqrt(norm2);
    for (double& e : m.m) e *= s;
    return m;
}

Mat3 random_diagonal(Rng& rng, double target_frobenius) {
    double d[3];
    double norm2 = 0.0;
    do {
        norm2 = 0.0;
        for (double& e : d) {
            e = rng.normal();
            norm2 += e * e;
        }
    } while (norm2 == 0.0);
    const double s = target_frobenius / std::sqrt(norm2);
    return Mat3::diag(d[0] * s, d[1] * s, d[2] * s);
}

SlopeProbeResult prop1_slope_probe(int num_pairs, double rho_min, double rho_max,
                                   std::uint64_t seed, ProbePairKind kind, bool relative) {
    if (num_pairs < 20) throw DomainError("prop1_slope_probe: num_pairs must be >= 20");
    if (!(rho_min > 0.0) || !(rho_max < 1.0) || !(rho_min <= rho_max)) {
        throw DomainError("prop1_slope_probe: need 0 < rho_min <= rho_max < 1");
    }

    Rng rng(seed);
    SlopeProbeResult out;
    out.samples.reserve(static_cast<std::size_t>(num_pairs));

    const double log_lo = std::log(rho_min);
    const double log_hi = std::log(rho_max);
    for (int i = 0; i < num_pairs; ++i) {
        const double f = num_pairs > 1 ? static_cast<double>(i) / (num_pairs - 1) : 0.0;
        const double rho = std::exp(log_lo + f * (log_hi - log_lo));
        Mat3 a, b;
        if (kind == ProbePairKind::CommutingDiagonal) {
            a = random_diagonal(rng, rho);
            b = random_diagonal(rng, rho);
        } else {
            a = random_gl3(rng, rho);
            b = random_gl3(rng, rho);
        }
        const double eps = composition_residual(a, b, relative);
        // Both pair members carry the same norm, so the abscissa max(.,.)^2
        // reduces to rho^2.
        out.samples.emplace_back(rho * rho, eps);
    }

    // Least-squares line through (log x, log eps), skipping residuals at the
    // double-precision floor.
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int n = 0;
    for (const auto& [x2, eps] : out.samples) {
        if (eps < 1e-14) continue;
        const double lx = std::log(x2);
        const double ly = std::log(eps);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n < 2) throw DegenerateFit("prop1_slope_probe: all residuals below 1e-14");
    const double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-12 * std::max(1.0, sxx) * n) {
        throw DegenerateFit("prop1_slope_probe: no spread in ||M||_F^2 abscissa");
    }
    out.slope = (n * sxy - sx * sy) / denom;
    out.intercept = (sy - out.slope * sx) / n;
    return out;
}

}  // namespace libra
