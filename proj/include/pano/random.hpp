#pragma once

#include <cmath>
#include <cstdint>

#include "pano/matrix.hpp"
#include "pano/tensor.hpp"

namespace pano {

/// SplitMix64 (Steele, Lea & Flood). Fully specified integer arithmetic, so a
/// seed reproduces the same stream everywhere.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double next_unit() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * next_unit(); }

private:
    std::uint64_t state_;
};

/// Entries uniform in [-scale, scale), filled row-major.
inline Matrix random_matrix(SplitMix64& rng, int rows, int cols, double scale) {
    Matrix m(rows, cols);
    for (double& x : m.data()) x = rng.uniform(-scale, scale);
    return m;
}

/// Entries uniform in [-1, 1), filled in storage order.
inline ErpTensor random_tensor(SplitMix64& rng, int channels, GridShape shape) {
    ErpTensor t(channels, shape);
    for (double& x : t.data()) x = rng.uniform(-1.0, 1.0);
    return t;
}

}  // namespace pano
