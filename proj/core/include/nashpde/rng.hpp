#pragma once

#include <cstdint>

#include "nashpde/grid.hpp"

namespace nashpde {

/// SplitMix64 with canonical double conversion. Hand-rolled instead of
/// <random> distributions so sampled values are identical across standard
/// libraries, which the reproducibility contract requires.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

private:
    std::uint64_t state_;
};

/// Node-wise i.i.d. uniform field in [lo, hi].
inline GridFunction random_field(Rng& rng, const Grid& grid, double lo, double hi) {
    std::vector<double> v(static_cast<std::size_t>(grid.interior_count()));
    for (double& x : v) x = rng.uniform(lo, hi);
    return GridFunction(grid, std::move(v));
}

}  // namespace nashpde
