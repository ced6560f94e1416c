#pragma once

// Independent reference computations used only by tests. None of these call
// the library routine they are meant to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "pano/pano.hpp"

namespace oracle {

using pano::kPi;

/// Great-circle distance from the chord between the two unit vectors.
inline double chord_distance(pano::SphCoord a, pano::SphCoord b) {
    const double ax = std::cos(a.lat) * std::cos(a.lon), ay = std::cos(a.lat) * std::sin(a.lon), az = std::sin(a.lat);
    const double bx = std::cos(b.lat) * std::cos(b.lon), by = std::cos(b.lat) * std::sin(b.lon), bz = std::sin(b.lat);
    const double chord = std::sqrt((ax - bx) * (ax - bx) + (ay - by) * (ay - by) + (az - bz) * (az - bz));
    return 2.0 * std::asin(std::min(1.0, chord / 2.0));
}

/// Angle between the unit vectors via atan2(|a x b|, a . b); well conditioned near antipodes.
inline double vector_angle(pano::SphCoord a, pano::SphCoord b) {
    const double ax = std::cos(a.lat) * std::cos(a.lon), ay = std::cos(a.lat) * std::sin(a.lon), az = std::sin(a.lat);
    const double bx = std::cos(b.lat) * std::cos(b.lon), by = std::cos(b.lat) * std::sin(b.lon), bz = std::sin(b.lat);
    const double cx = ay * bz - az * by, cy = az * bx - ax * bz, cz = ax * by - ay * bx;
    return std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), ax * bx + ay * by + az * bz);
}

/// Band-limited test field: 0.5 z + 0.3 x + 0.2 x y (three low-order harmonics).
inline double band_limited(pano::SphCoord s) {
    const double x = std::cos(s.lat) * std::cos(s.lon);
    const double y = std::cos(s.lat) * std::sin(s.lon);
    const double z = std::sin(s.lat);
    return 0.5 * z + 0.3 * x + 0.2 * x * y;
}

inline pano::ErpTensor band_limited_image(int height) {
    const pano::GridShape shape{height, 2 * height};
    pano::ErpTensor t(1, shape);
    for (int i = 0; i < height; ++i) {
        for (int j = 0; j < shape.width; ++j) {
            const double lat = kPi * (0.5 - (i + 0.5) / height);
            const double lon = 2.0 * kPi * (j + 0.5) / shape.width - kPi;
            t.at(0, i, j) = band_limited({lat, lon});
        }
    }
    return t;
}

/// Dense single-head softmax attention with an explicit additive bias:
/// softmax(X Wq (X Wk)^T * scale + bias) (X Wv), written as plain loops.
inline std::vector<std::vector<double>> dense_attention(const std::vector<std::vector<double>>& x,
                                                        const std::vector<std::vector<double>>& wq,
                                                        const std::vector<std::vector<double>>& wk,
                                                        const std::vector<std::vector<double>>& wv,
                                                        const std::vector<std::vector<double>>& bias, double scale,
                                                        std::vector<std::vector<double>>* weights_out = nullptr) {
    const std::size_t n = x.size(), d_in = x[0].size(), d_out = wq[0].size(), d_v = wv[0].size();
    auto project = [&](const std::vector<std::vector<double>>& w, std::size_t cols) {
        std::vector<std::vector<double>> out(n, std::vector<double>(cols, 0.0));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < cols; ++c)
                for (std::size_t k = 0; k < d_in; ++k) out[i][c] += x[i][k] * w[k][c];
        return out;
    };
    const auto q = project(wq, d_out), k = project(wk, d_out), v = project(wv, d_v);
    std::vector<std::vector<double>> weights(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> logits(n);
        for (std::size_t j = 0; j < n; ++j) {
            double dot = 0.0;
            for (std::size_t c = 0; c < d_out; ++c) dot += q[i][c] * k[j][c];
            logits[j] = dot * scale + (bias.empty() ? 0.0 : bias[i][j]);
        }
        const double peak = *std::max_element(logits.begin(), logits.end());
        double total = 0.0;
        for (double& l : logits) total += (l = std::exp(l - peak));
        for (std::size_t j = 0; j < n; ++j) weights[i][j] = logits[j] / total;
    }
    std::vector<std::vector<double>> out(n, std::vector<double>(d_v, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t c = 0; c < d_v; ++c) out[i][c] += weights[i][j] * v[j][c];
    if (weights_out) *weights_out = weights;
    return out;
}

inline std::vector<std::vector<double>> to_rows(const pano::Matrix& m) {
    std::vector<std::vector<double>> rows(m.rows(), std::vector<double>(m.cols()));
    for (int r = 0; r < m.rows(); ++r)
        for (int c = 0; c < m.cols(); ++c) rows[r][c] = m(r, c);
    return rows;
}

inline std::vector<std::vector<double>> columns(const std::vector<std::vector<double>>& m, int first, int count) {
    std::vector<std::vector<double>> out(m.size(), std::vector<double>(count));
    for (std::size_t r = 0; r < m.size(); ++r)
        for (int c = 0; c < count; ++c) out[r][c] = m[r][first + c];
    return out;
}

inline std::vector<std::vector<double>> matmul(const std::vector<std::vector<double>>& a,
                                               const std::vector<std::vector<double>>& b) {
    std::vector<std::vector<double>> out(a.size(), std::vector<double>(b[0].size(), 0.0));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t k = 0; k < b.size(); ++k)
            for (std::size_t j = 0; j < b[0].size(); ++j) out[i][j] += a[i][k] * b[k][j];
    return out;
}

/// Multi-head window attention assembled from dense_attention per head.
inline std::vector<std::vector<double>> dense_multihead(const std::vector<std::vector<double>>& x,
                                                        const pano::AttentionParams& p,
                                                        const std::vector<std::vector<double>>& dist) {
    const int hd = p.model_dim / p.heads;
    const auto wq = to_rows(p.query), wk = to_rows(p.key), wv = to_rows(p.value), wo = to_rows(p.out);
    std::vector<std::vector<double>> concat(x.size(), std::vector<double>(p.model_dim));
    for (int h = 0; h < p.heads; ++h) {
        std::vector<std::vector<double>> bias;
        if (!dist.empty()) {
            bias = dist;
            for (auto& row : bias)
                for (double& b : row) b *= -p.alpha[h];
        }
        const auto out = dense_attention(x, columns(wq, h * hd, hd), columns(wk, h * hd, hd), columns(wv, h * hd, hd),
                                         bias, 1.0 / std::sqrt(double(hd)));
        for (std::size_t r = 0; r < x.size(); ++r)
            for (int c = 0; c < hd; ++c) concat[r][h * hd + c] = out[r][c];
    }
    return matmul(concat, wo);
}

// Loss / metric loop oracles -------------------------------------------------

struct LoopLoss {
    double pix;
    double grad;
};

/// Direct transcription of the masked L1 and gradient terms over 2-D indices.
inline LoopLoss loop_loss(const pano::DepthMap& pred, const pano::DepthMap& gt, double s, double t) {
    const int h = gt.shape.height, w = gt.shape.width;
    std::vector<std::vector<double>> delta(h, std::vector<double>(w, 0.0));
    double pix = 0.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double g = gt.at(y, x);
            const double m = g > 0.0 ? 1.0 : 0.0;
            const double r = s * pred.at(y, x) + t - g;
            pix += m * std::abs(r);
            delta[y][x] = m * r;
        }
    }
    pix /= double(h * w);
    double grad = 0.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int xr = x == w - 1 ? 0 : x + 1;
            grad += std::abs(delta[y][xr] - delta[y][x]);
            if (y < h - 1) grad += std::abs(delta[y + 1][x] - delta[y][x]);
        }
    }
    return {pix, grad};
}

/// Grid search for the least-squares (s, t), refined by successive zooming.
inline std::pair<double, double> grid_search_align(const pano::DepthMap& pred, const pano::DepthMap& gt,
                                                   double tolerance) {
    auto cost = [&](double s, double t) {
        double c = 0.0;
        for (std::size_t i = 0; i < gt.values.size(); ++i)
            if (gt.values[i] > 0.0) c += (s * pred.values[i] + t - gt.values[i]) * (s * pred.values[i] + t - gt.values[i]);
        return c;
    };
    double cs = 0.0, ct = 0.0, span = 64.0;
    while (span > tolerance / 8.0) {
        double best = cost(cs, ct), bs = cs, bt = ct;
        const int steps = 20;
        for (int a = -steps; a <= steps; ++a) {
            for (int b = -steps; b <= steps; ++b) {
                const double s = cs + span * a / steps, t = ct + span * b / steps;
                const double c = cost(s, t);
                if (c < best) best = c, bs = s, bt = t;
            }
        }
        cs = bs, ct = bt;
        span /= 4.0;
    }
    return {cs, ct};
}

struct LoopMetrics {
    double abs_rel = 0, sq_rel = 0, rms_lin = 0, rms_log = 0, mae = 0, d1 = 0, d2 = 0, d3 = 0;
};

inline LoopMetrics loop_metrics(const pano::DepthMap& pred, const pano::DepthMap& gt) {
    LoopMetrics m;
    int n = 0, nl = 0, c1 = 0, c2 = 0, c3 = 0;
    for (int y = 0; y < gt.shape.height; ++y) {
        for (int x = 0; x < gt.shape.width; ++x) {
            const double g = gt.at(y, x), p = pred.at(y, x);
            if (g <= 0.0) continue;
            ++n;
            m.abs_rel += std::abs(p - g) / g;
            m.sq_rel += (p - g) * (p - g) / g;
            m.rms_lin += (p - g) * (p - g);
            m.mae += std::abs(p - g);
            if (p > 0.0) {
                ++nl;
                m.rms_log += (std::log(p) - std::log(g)) * (std::log(p) - std::log(g));
                const double ratio = p / g > g / p ? p / g : g / p;
                c1 += ratio < 1.25;
                c2 += ratio < 1.25 * 1.25;
                c3 += ratio < 1.25 * 1.25 * 1.25;
            }
        }
    }
    m.abs_rel /= n;
    m.sq_rel /= n;
    m.rms_lin = std::sqrt(m.rms_lin / n);
    m.mae /= n;
    m.rms_log = std::sqrt(m.rms_log / nl);
    m.d1 = double(c1) / nl;
    m.d2 = double(c2) / nl;
    m.d3 = double(c3) / nl;
    return m;
}

/// Random depth map with entries uniform in [lo, hi).
inline pano::DepthMap random_depth(std::mt19937_64& rng, pano::GridShape shape, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    pano::DepthMap d(shape);
    for (double& v : d.values) v = u(rng);
    return d;
}

/// Byte-order twin of a PFM file: negates the scale and reverses every payload word.
inline std::vector<unsigned char> swap_payload_endianness(const std::vector<unsigned char>& file) {
    // Header is three newline-terminated lines.
    std::size_t pos = 0;
    for (int lines = 0; lines < 3; ++pos)
        if (file[pos] == '\n') ++lines;
    std::vector<unsigned char> out(file.begin(), file.begin() + pos);
    std::string header(out.begin(), out.end());
    const auto scale_at = header.rfind('\n', header.size() - 2) + 1;
    std::string scale = header.substr(scale_at, header.size() - 1 - scale_at);
    scale = scale[0] == '-' ? scale.substr(1) : "-" + scale;
    header = header.substr(0, scale_at) + scale + "\n";
    out.assign(header.begin(), header.end());
    for (std::size_t i = pos; i + 3 < file.size(); i += 4) {
        out.push_back(file[i + 3]);
        out.push_back(file[i + 2]);
        out.push_back(file[i + 1]);
        out.push_back(file[i]);
    }
    return out;
}

}  // namespace oracle
