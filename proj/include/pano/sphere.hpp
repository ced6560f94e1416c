#pragma once

// Coordinate conversions between the ERP pixel lattice, latitude/longitude
// and unit vectors on the sphere, plus great-circle distance.
//
// Conventions:
//   * pixel space is continuous; pixel (i, j) covers [j, j+1) x [i, i+1) and
//     its center sits at (u, v) = (j + 0.5, i + 0.5)
//   * row 0 is the north pole edge, column 0 is the lon = -pi edge
//   * z is the polar axis: (lat, lon) = (0, 0) is +x, (0, pi/2) is +y

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "pano/errors.hpp"

namespace pano {

inline constexpr double kPi = std::numbers::pi;

struct GridShape {
    int height = 0;
    int width = 0;

    friend bool operator==(const GridShape&, const GridShape&) = default;

    long long area() const noexcept { return static_cast<long long>(height) * width; }
};

// H >= 1 is accepted so the coarsest pyramid levels (e.g. 1x2) remain valid grids.
inline void validate(const GridShape& shape) {
    if (shape.height < 1 || shape.width < 2) {
        throw ShapeError("grid shape " + std::to_string(shape.height) + "x" +
                         std::to_string(shape.width) + " is invalid (need H >= 1, W >= 2)");
    }
}

inline std::string to_string(const GridShape& shape) {
    return std::to_string(shape.height) + "x" + std::to_string(shape.width);
}

struct PixelCoord {
    double u = 0.0;  // column
    double v = 0.0;  // row
};

struct SphCoord {
    double lat = 0.0;
    double lon = 0.0;
};

struct UnitVec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double norm() const noexcept { return std::sqrt(x * x + y * y + z * z); }
};

/// Wraps `value` into [0, period). Exact for values already in range.
inline double wrap_periodic(double value, double period) noexcept {
    double r = std::fmod(value, period);
    if (r < 0.0) r += period;
    if (r >= period) r -= period;  // fmod of a tiny negative can round up to period
    return r;
}

inline PixelCoord pixel_center(int row, int col) noexcept {
    return {col + 0.5, row + 0.5};
}

/// ERP pixel -> (lat, lon). `u` wraps modulo W; `v` must lie in [0, H].
inline SphCoord pix_to_sph(PixelCoord p, const GridShape& shape) {
    validate(shape);
    const double h = shape.height;
    const double w = shape.width;
    if (!std::isfinite(p.u) || !std::isfinite(p.v)) {
        throw DomainError("pix_to_sph: non-finite pixel coordinate");
    }
    if (p.v < 0.0 || p.v > h) {
        throw DomainError("pix_to_sph: row " + std::to_string(p.v) + " outside [0, " +
                          std::to_string(shape.height) + "]");
    }
    const double u = wrap_periodic(p.u, w);
    return {kPi * (0.5 - p.v / h), 2.0 * kPi * u / w - kPi};
}

/// Inverse of pix_to_sph. Any finite longitude is accepted and wrapped, so
/// lon = +pi and lon = -pi both land on u = 0.
inline PixelCoord sph_to_pix(SphCoord s, const GridShape& shape) {
    validate(shape);
    if (!std::isfinite(s.lat) || !std::isfinite(s.lon)) {
        throw DomainError("sph_to_pix: non-finite spherical coordinate");
    }
    if (std::abs(s.lat) > kPi / 2) {
        throw DomainError("sph_to_pix: latitude outside [-pi/2, pi/2]");
    }
    const double h = shape.height;
    const double w = shape.width;
    return {wrap_periodic(w * (s.lon + kPi) / (2.0 * kPi), w), h * (0.5 - s.lat / kPi)};
}

inline UnitVec3 sph_to_unit(SphCoord s) noexcept {
    const double c = std::cos(s.lat);
    return {c * std::cos(s.lon), c * std::sin(s.lon), std::sin(s.lat)};
}

/// lon is fixed to 0 at the exact poles.
inline SphCoord unit_to_sph(UnitVec3 v) {
    const double n = v.norm();
    if (!std::isfinite(n) || std::abs(n - 1.0) > 1e-6) {
        throw DomainError("unit_to_sph: vector norm " + std::to_string(n) + " is not 1");
    }
    const double z = std::clamp(v.z, -1.0, 1.0);
    const double lon = (v.x == 0.0 && v.y == 0.0) ? 0.0 : std::atan2(v.y, v.x);
    return {std::asin(z), lon};
}

/// Great-circle distance on the unit sphere, in radians.
inline double haversine(SphCoord a, SphCoord b) noexcept {
    // |differences| keep d(a, b) == d(b, a) bitwise.
    const double s_lat = std::sin(std::abs(b.lat - a.lat) / 2.0);
    const double s_lon = std::sin(std::abs(b.lon - a.lon) / 2.0);
    double h = s_lat * s_lat + std::cos(a.lat) * std::cos(b.lat) * s_lon * s_lon;
    h = std::clamp(h, 0.0, 1.0);
    if (h >= 1.0) return kPi;
    return 2.0 * std::atan(std::sqrt(h / (1.0 - h)));
}

/// Rotation restricted to signed axis permutations, so every product is exact.
class AxisRotation {
public:
    using Rows = std::array<std::array<int, 3>, 3>;

    static constexpr AxisRotation identity() noexcept {
        return AxisRotation(Rows{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}});
    }

    // Quarter turn about +y: takes the north pole (0,0,1) to (1,0,0).
    static constexpr AxisRotation quarter_turn_y() noexcept {
        return AxisRotation(Rows{{{0, 0, 1}, {0, 1, 0}, {-1, 0, 0}}});
    }

    // Throws DomainError unless `rows` is a signed permutation with det +1.
    static AxisRotation from_rows(const Rows& rows) {
        AxisRotation r(rows);
        if (!r.is_proper_signed_permutation()) {
            throw DomainError("AxisRotation: matrix is not a proper signed permutation");
        }
        return r;
    }

    constexpr AxisRotation transpose() const noexcept {
        Rows t{};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) t[i][j] = m_[j][i];
        return AxisRotation(t);
    }

    constexpr AxisRotation inverse() const noexcept { return transpose(); }

    constexpr AxisRotation operator*(const AxisRotation& rhs) const noexcept {
        Rows p{};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                for (int k = 0; k < 3; ++k) p[i][j] += m_[i][k] * rhs.m_[k][j];
        return AxisRotation(p);
    }

    constexpr const Rows& rows() const noexcept { return m_; }

    friend constexpr bool operator==(const AxisRotation&, const AxisRotation&) = default;

private:
    constexpr explicit AxisRotation(const Rows& m) noexcept : m_(m) {}

    bool is_proper_signed_permutation() const noexcept {
        for (int i = 0; i < 3; ++i) {
            int nonzero = 0;
            for (int j = 0; j < 3; ++j) {
                if (m_[i][j] != 0) {
                    if (m_[i][j] != 1 && m_[i][j] != -1) return false;
                    ++nonzero;
                }
            }
            if (nonzero != 1) return false;
        }
        if ((*this) * transpose() != identity()) return false;
        const int det = m_[0][0] * (m_[1][1] * m_[2][2] - m_[1][2] * m_[2][1]) -
                        m_[0][1] * (m_[1][0] * m_[2][2] - m_[1][2] * m_[2][0]) +
                        m_[0][2] * (m_[1][0] * m_[2][1] - m_[1][1] * m_[2][0]);
        return det == 1;
    }

    Rows m_;
};

inline UnitVec3 apply_rotation(UnitVec3 v, const AxisRotation& r) noexcept {
    const auto& m = r.rows();
    const std::array<double, 3> in{v.x, v.y, v.z};
    std::array<double, 3> out{};
    for (int i = 0; i < 3; ++i) {
        // Exactly one entry per row is nonzero.
        for (int j = 0; j < 3; ++j) {
            if (m[i][j] != 0) out[i] = m[i][j] > 0 ? in[j] : -in[j];
        }
    }
    return {out[0], out[1], out[2]};
}

}  // namespace pano
