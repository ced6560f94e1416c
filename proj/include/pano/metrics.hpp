#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "pano/errors.hpp"
#include "pano/losses.hpp"

namespace pano {

/// Standard panoramic depth metrics over valid pixels (gt > 0). Log error and
/// the delta accuracies additionally need pred > 0; `log_valid_count` says how
/// many pixels they cover.
struct MetricsReport {
    double abs_rel = 0.0;
    double sq_rel = 0.0;
    double rms_lin = 0.0;
    double rms_log = 0.0;
    double mae = 0.0;
    double delta1 = 0.0;
    double delta2 = 0.0;
    double delta3 = 0.0;
    std::size_t valid_count = 0;
    std::size_t log_valid_count = 0;
};

// 1.25, 1.25^2, 1.25^3 are exact binary fractions.
inline constexpr double kDeltaThresholds[3] = {1.25, 1.5625, 1.953125};

inline MetricsReport evaluate(const DepthMap& pred_in, const DepthMap& gt, bool align_first) {
    require_same_shape(pred_in, gt, "evaluate");
    const DepthMap pred = align_first ? apply_alignment(pred_in, ssi_align(pred_in, gt)) : pred_in;

    MetricsReport m;
    double sum_abs_rel = 0.0, sum_sq_rel = 0.0, sum_sq = 0.0, sum_abs = 0.0, sum_sq_log = 0.0;
    std::size_t within[3] = {0, 0, 0};
    for (std::size_t i = 0; i < gt.values.size(); ++i) {
        const double g = gt.values[i];
        if (!(g > 0.0)) continue;
        const double p = pred.values[i];
        const double diff = p - g;
        ++m.valid_count;
        sum_abs_rel += std::abs(diff) / g;
        sum_sq_rel += diff * diff / g;
        sum_sq += diff * diff;
        sum_abs += std::abs(diff);
        if (p > 0.0) {
            ++m.log_valid_count;
            const double log_diff = std::log(p) - std::log(g);
            sum_sq_log += log_diff * log_diff;
            const double ratio = std::max(p / g, g / p);
            for (int k = 0; k < 3; ++k) within[k] += ratio < kDeltaThresholds[k];
        }
    }
    if (m.valid_count == 0) throw DegenerateInputError("evaluate: ground truth has no valid pixels");

    const double n = static_cast<double>(m.valid_count);
    m.abs_rel = sum_abs_rel / n;
    m.sq_rel = sum_sq_rel / n;
    m.rms_lin = std::sqrt(sum_sq / n);
    m.mae = sum_abs / n;
    if (m.log_valid_count > 0) {
        const double nl = static_cast<double>(m.log_valid_count);
        m.rms_log = std::sqrt(sum_sq_log / nl);
        m.delta1 = within[0] / nl;
        m.delta2 = within[1] / nl;
        m.delta3 = within[2] / nl;
    }
    return m;
}

}  // namespace pano
