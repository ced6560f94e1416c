#pragma once

// Scale-and-shift-invariant (SSI) depth loss: closed-form affine alignment,
// masked L1 pixel term, wrap-aware gradient term, and their analytic gradient.
//
// A pixel is valid iff its ground-truth depth is > 0.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pano/errors.hpp"
#include "pano/sphere.hpp"
#include "pano/tensor.hpp"

namespace pano {

struct DepthMap {
    GridShape shape{};
    std::vector<double> values;  // row-major H x W

    DepthMap() = default;
    DepthMap(GridShape s, double fill = 0.0) : shape(s), values(static_cast<std::size_t>(s.area()), fill) {
        validate(s);
    }
    DepthMap(GridShape s, std::vector<double> v) : shape(s), values(std::move(v)) {
        validate(s);
        if (values.size() != static_cast<std::size_t>(s.area())) throw ShapeError("DepthMap: wrong value count");
        for (double x : values)
            if (!std::isfinite(x)) throw DomainError("DepthMap: non-finite value");
    }

    double& at(int row, int col) noexcept { return values[static_cast<std::size_t>(row) * shape.width + col]; }
    double at(int row, int col) const noexcept { return values[static_cast<std::size_t>(row) * shape.width + col]; }

    friend bool operator==(const DepthMap&, const DepthMap&) = default;
};

inline DepthMap to_depth_map(const ErpTensor& t) {
    if (t.channels() != 1) throw ShapeError("to_depth_map: expected 1 channel, got " + std::to_string(t.channels()));
    auto ch = t.channel(0);
    return DepthMap(t.shape(), std::vector<double>(ch.begin(), ch.end()));
}

inline ErpTensor to_tensor(const DepthMap& d) { return ErpTensor(1, d.shape, d.values); }

inline void require_same_shape(const DepthMap& a, const DepthMap& b, const char* what) {
    if (a.shape != b.shape) {
        throw ShapeError(std::string(what) + ": shapes " + to_string(a.shape) + " and " + to_string(b.shape) + " differ");
    }
}

struct AlignParams {
    double s = 1.0;
    double t = 0.0;
};

/// Least-squares (s, t) minimizing sum over valid pixels of (s*pred + t - gt)^2.
inline AlignParams ssi_align(const DepthMap& pred, const DepthMap& gt) {
    require_same_shape(pred, gt, "ssi_align");
    std::size_t n = 0;
    double sum_p = 0.0;
    double sum_g = 0.0;
    for (std::size_t i = 0; i < gt.values.size(); ++i) {
        if (gt.values[i] > 0.0) {
            ++n;
            sum_p += pred.values[i];
            sum_g += gt.values[i];
        }
    }
    if (n < 2) throw DegenerateInputError("ssi_align: need at least 2 valid pixels, have " + std::to_string(n));
    const double mean_p = sum_p / n;
    const double mean_g = sum_g / n;

    // Centered normal equations.
    double var_p = 0.0;
    double cov = 0.0;
    for (std::size_t i = 0; i < gt.values.size(); ++i) {
        if (gt.values[i] > 0.0) {
            const double dp = pred.values[i] - mean_p;
            var_p += dp * dp;
            cov += dp * (gt.values[i] - mean_g);
        }
    }
    if (!(var_p > 0.0)) throw DegenerateInputError("ssi_align: prediction is constant over the valid pixels");
    const double s = cov / var_p;
    return {s, mean_g - s * mean_p};
}

inline DepthMap apply_alignment(const DepthMap& pred, AlignParams a) {
    DepthMap out = pred;
    for (double& v : out.values) v = a.s * v + a.t;
    return out;
}

/// (1/n) * sum of m * |pred - gt| with n the total pixel count.
inline double l_pix(const DepthMap& pred_aligned, const DepthMap& gt) {
    require_same_shape(pred_aligned, gt, "l_pix");
    double total = 0.0;
    for (std::size_t i = 0; i < gt.values.size(); ++i) {
        if (gt.values[i] > 0.0) total += std::abs(pred_aligned.values[i] - gt.values[i]);
    }
    return total / static_cast<double>(gt.values.size());
}

namespace detail {

inline std::vector<double> masked_residual(const DepthMap& pred_aligned, const DepthMap& gt) {
    std::vector<double> r(gt.values.size(), 0.0);
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (gt.values[i] > 0.0) r[i] = pred_aligned.values[i] - gt.values[i];
    }
    return r;
}

inline double sign(double x) noexcept { return (x > 0.0) - (x < 0.0); }

}  // namespace detail

/// Sum of |Gx| + |Gy| over the masked residual. Gx is a forward difference
/// that wraps across the ERP seam; Gy is a forward difference that skips the
/// last row.
inline double l_grad(const DepthMap& pred_aligned, const DepthMap& gt) {
    require_same_shape(pred_aligned, gt, "l_grad");
    const std::vector<double> r = detail::masked_residual(pred_aligned, gt);
    const int h = gt.shape.height;
    const int w = gt.shape.width;
    auto at = [&](int i, int j) { return r[static_cast<std::size_t>(i) * w + j]; };
    double total = 0.0;
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            total += std::abs(at(i, (j + 1) % w) - at(i, j));
            if (i + 1 < h) total += std::abs(at(i + 1, j) - at(i, j));
        }
    }
    return total;
}

inline constexpr double kGradWeight = 0.5;

struct LossReport {
    double l_pix = 0.0;
    double l_grad = 0.0;
    double l_total = 0.0;
    std::size_t valid_count = 0;
};

inline std::size_t count_valid(const DepthMap& gt) noexcept {
    std::size_t n = 0;
    for (double g : gt.values) n += g > 0.0;
    return n;
}

/// Loss terms for a prediction under a fixed alignment.
inline LossReport aligned_loss(const DepthMap& pred, const DepthMap& gt, AlignParams align) {
    require_same_shape(pred, gt, "aligned_loss");
    const DepthMap aligned = apply_alignment(pred, align);
    LossReport r;
    r.l_pix = l_pix(aligned, gt);
    r.l_grad = l_grad(aligned, gt);
    r.l_total = r.l_pix + kGradWeight * r.l_grad;
    r.valid_count = count_valid(gt);
    return r;
}

inline std::pair<LossReport, AlignParams> total_loss(const DepthMap& pred, const DepthMap& gt) {
    const AlignParams a = ssi_align(pred, gt);
    return {aligned_loss(pred, gt, a), a};
}

/// Gradient of l_total w.r.t. the raw prediction at a fixed alignment (the
/// (s, t) pair is treated as a constant). The subgradient of |x| at 0 is 0.
inline DepthMap loss_gradient(const DepthMap& pred, const DepthMap& gt, AlignParams align) {
    require_same_shape(pred, gt, "loss_gradient");
    const int h = gt.shape.height;
    const int w = gt.shape.width;
    const std::vector<double> r = detail::masked_residual(apply_alignment(pred, align), gt);
    auto idx = [w](int i, int j) { return static_cast<std::size_t>(i) * w + j; };

    // d/d(residual) first, then apply the mask and the chain factor s.
    std::vector<double> g(r.size(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) g[i] = detail::sign(r[i]) * inv_n;
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            const int jn = (j + 1) % w;
            const double sx = detail::sign(r[idx(i, jn)] - r[idx(i, j)]) * kGradWeight;
            g[idx(i, jn)] += sx;
            g[idx(i, j)] -= sx;
            if (i + 1 < h) {
                const double sy = detail::sign(r[idx(i + 1, j)] - r[idx(i, j)]) * kGradWeight;
                g[idx(i + 1, j)] += sy;
                g[idx(i, j)] -= sy;
            }
        }
    }
    DepthMap out(gt.shape);
    for (std::size_t i = 0; i < g.size(); ++i) out.values[i] = gt.values[i] > 0.0 ? align.s * g[i] : 0.0;
    return out;
}

inline DepthMap loss_gradient(const DepthMap& pred, const DepthMap& gt) {
    return loss_gradient(pred, gt, ssi_align(pred, gt));
}

/// Central finite differences of aligned_loss(...).l_total at a fixed alignment.
inline DepthMap numeric_loss_gradient(const DepthMap& pred, const DepthMap& gt, AlignParams align, double step) {
    require_same_shape(pred, gt, "numeric_loss_gradient");
    DepthMap probe = pred;
    DepthMap out(gt.shape);
    for (std::size_t i = 0; i < probe.values.size(); ++i) {
        const double x = probe.values[i];
        probe.values[i] = x + step;
        const double up = aligned_loss(probe, gt, align).l_total;
        probe.values[i] = x - step;
        const double down = aligned_loss(probe, gt, align).l_total;
        probe.values[i] = x;
        out.values[i] = (up - down) / (2.0 * step);
    }
    return out;
}

/// Largest componentwise |a - b| / max(|a|, |b|); components where both are 0 count as 0.
inline double max_relative_error(const DepthMap& a, const DepthMap& b) {
    require_same_shape(a, b, "max_relative_error");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        const double scale = std::max(std::abs(a.values[i]), std::abs(b.values[i]));
        if (scale == 0.0) continue;
        worst = std::max(worst, std::abs(a.values[i] - b.values[i]) / scale);
    }
    return worst;
}

}  // namespace pano
