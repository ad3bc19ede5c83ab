#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace flowdepth {

/// Seeded generator with explicit draw arithmetic, so sequences do not
/// depend on the standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1).
    double uniform() { return (engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform direction on the unit sphere.
    Eigen::Vector3d unit_vector() {
        const double z = 1.0 - 2.0 * uniform();
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = 2.0 * 3.14159265358979323846 * uniform();
        return {r * std::cos(phi), r * std::sin(phi), z};
    }

private:
    std::mt19937_64 engine_;
};

} // namespace flowdepth
