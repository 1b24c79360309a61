#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace libra {

// Error taxonomy shared by all modules. Each maps to one failure mode of a
// documented contract; the CLI translates them to exit codes.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SingularResolvent : Error {
    using Error::Error;
};
struct ShapeMismatch : Error {
    using Error::Error;
};
struct DomainError : Error {
    using Error::Error;
};
struct DegenerateFit : Error {
    using Error::Error;
};
struct DegenerateField : Error {
    using Error::Error;
};
struct EmptyMask : Error {
    using Error::Error;
};
struct ZeroAnchor : Error {
    using Error::Error;
};
struct TooSmall : Error {
    using Error::Error;
};
struct DivergenceDetected : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};

// Seeded generator with a stdlib-independent normal sampler so probe results
// are reproducible across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() {
        // 53-bit mantissa uniform in [0,1)
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(uniform() * (static_cast<double>(hi) - lo + 1.0));
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * M_PI * u2);
        have_spare_ = true;
        return r * std::cos(2.0 * M_PI * u2);
    }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

}  // namespace libra
