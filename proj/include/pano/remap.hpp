#pragma once

// Image-space remaps over ErpTensor: bipolar re-projection (BRP) through
// precomputed sampling grids, exact circular column rotation, and 2x upsampling.
//
// Border policy everywhere: columns wrap modulo W (the ERP seam is continuous),
// rows clamp to [0, H-1] (the two poles are not neighbours).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <string>
#include <utility>
#include <vector>

#include "pano/errors.hpp"
#include "pano/sphere.hpp"
#include "pano/tensor.hpp"

namespace pano {

/// For every output pixel, the position to read from in the source tensor.
/// Positions are in pixel-index units: (u, v) = (j, i) is exactly the center
/// of pixel (i, j). Stored row-major, one entry per output pixel.
struct SamplingGrid {
    GridShape shape{};
    std::vector<PixelCoord> src;

    const PixelCoord& at(int row, int col) const noexcept {
        return src[static_cast<std::size_t>(row) * shape.width + col];
    }
};

enum class BrpDirection { Forward, Inverse };

inline SamplingGrid identity_grid(GridShape shape) {
    validate(shape);
    SamplingGrid g{shape, {}};
    g.src.reserve(static_cast<std::size_t>(shape.area()));
    for (int i = 0; i < shape.height; ++i)
        for (int j = 0; j < shape.width; ++j) g.src.push_back({double(j), double(i)});
    return g;
}

/// Rotation applied to output-pixel directions to find their source direction.
inline AxisRotation brp_rotation(BrpDirection dir) noexcept {
    const auto forward = AxisRotation::quarter_turn_y();
    return dir == BrpDirection::Forward ? forward : forward.transpose();
}

/// Builds the BRP grid for an H x 2H lattice. The Forward grid moves the
/// source north pole to (lat 0, lon pi) in the output.
inline SamplingGrid build_brp_grid(GridShape shape, BrpDirection dir) {
    validate(shape);
    if (shape.width != 2 * shape.height) {
        throw ShapeError("build_brp_grid: BRP needs W = 2H, got " + to_string(shape));
    }
    const AxisRotation rot = brp_rotation(dir);
    const double max_row = shape.height - 1;
    SamplingGrid g{shape, {}};
    g.src.reserve(static_cast<std::size_t>(shape.area()));
    for (int i = 0; i < shape.height; ++i) {
        for (int j = 0; j < shape.width; ++j) {
            const UnitVec3 dir3 = apply_rotation(sph_to_unit(pix_to_sph(pixel_center(i, j), shape)), rot);
            const PixelCoord p = sph_to_pix(unit_to_sph(dir3), shape);
            g.src.push_back({wrap_periodic(p.u - 0.5, shape.width), std::clamp(p.v - 0.5, 0.0, max_row)});
        }
    }
    return g;
}

/// Bilinear read of channel `c` at index-space position (x, y).
inline double bilinear_sample(const ErpTensor& t, int c, double x, double y) noexcept {
    const int w = t.width();
    const int h = t.height();
    y = std::clamp(y, 0.0, double(h - 1));
    x = wrap_periodic(x, w);

    const double x_floor = std::floor(x);
    const double y_floor = std::floor(y);
    const double fx = x - x_floor;
    const double fy = y - y_floor;
    const int x0 = static_cast<int>(x_floor) % w;
    const int x1 = (x0 + 1) % w;
    const int y0 = static_cast<int>(y_floor);
    const int y1 = std::min(y0 + 1, h - 1);

    // std::lerp is exact at t = 0 and t = 1, which keeps integer positions bitwise.
    const double top = std::lerp(t.at(c, y0, x0), t.at(c, y0, x1), fx);
    const double bottom = std::lerp(t.at(c, y1, x0), t.at(c, y1, x1), fx);
    return std::lerp(top, bottom, fy);
}

inline ErpTensor apply_grid(const ErpTensor& t, const SamplingGrid& g) {
    if (t.shape() != g.shape) {
        throw ShapeError("apply_grid: tensor " + to_string(t.shape()) + " vs grid " + to_string(g.shape));
    }
    if (g.src.size() != static_cast<std::size_t>(g.shape.area())) {
        throw ShapeError("apply_grid: grid has " + std::to_string(g.src.size()) + " entries");
    }
    ErpTensor out(t.channels(), t.shape());
    for (int c = 0; c < t.channels(); ++c) {
        for (int i = 0; i < t.height(); ++i) {
            for (int j = 0; j < t.width(); ++j) {
                const PixelCoord& p = g.at(i, j);
                out.at(c, i, j) = bilinear_sample(t, c, p.u, p.v);
            }
        }
    }
    return out;
}

/// Shared, immutable BRP grid for (shape, direction); built on first use.
inline std::shared_ptr<const SamplingGrid> cached_brp_grid(GridShape shape, BrpDirection dir) {
    static std::mutex mutex;
    static std::map<std::tuple<int, int, int>, std::shared_ptr<const SamplingGrid>> cache;
    const auto key = std::make_tuple(shape.height, shape.width, static_cast<int>(dir));
    {
        std::lock_guard lock(mutex);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
    }
    auto grid = std::make_shared<const SamplingGrid>(build_brp_grid(shape, dir));
    std::lock_guard lock(mutex);
    return cache.emplace(key, std::move(grid)).first->second;
}

inline ErpTensor brp(const ErpTensor& t) {
    return apply_grid(t, *cached_brp_grid(t.shape(), BrpDirection::Forward));
}

inline ErpTensor brp_inverse(const ErpTensor& t) {
    return apply_grid(t, *cached_brp_grid(t.shape(), BrpDirection::Inverse));
}

/// Column u moves to (u + cols) mod W. Pure permutation, no arithmetic on values.
inline ErpTensor circular_rotate(const ErpTensor& t, long long cols) {
    const long long w = t.width();
    const int shift = static_cast<int>(((cols % w) + w) % w);
    ErpTensor out(t.channels(), t.shape());
    for (int c = 0; c < t.channels(); ++c)
        for (int i = 0; i < t.height(); ++i)
            for (int j = 0; j < t.width(); ++j) out.at(c, i, (j + shift) % t.width()) = t.at(c, i, j);
    return out;
}

inline ErpTensor circular_rotate_inverse(const ErpTensor& t, long long cols) {
    return circular_rotate(t, -(cols % t.width()));
}

/// Doubles both spatial dims with half-pixel-aligned bilinear sampling.
inline ErpTensor upsample2x(const ErpTensor& t) {
    const GridShape big{t.height() * 2, t.width() * 2};
    ErpTensor out(t.channels(), big);
    for (int c = 0; c < t.channels(); ++c) {
        for (int i = 0; i < big.height; ++i) {
            const double y = (i + 0.5) / 2.0 - 0.5;
            for (int j = 0; j < big.width; ++j) {
                out.at(c, i, j) = bilinear_sample(t, c, (j + 0.5) / 2.0 - 0.5, y);
            }
        }
    }
    return out;
}

}  // namespace pano
