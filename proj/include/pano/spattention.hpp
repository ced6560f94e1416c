#pragma once

// Window attention with CLE bias (SPAttention), the SPDecoder block that
// composes it with circular rotation and BRP, and a toy coarse-to-fine decoder.

#include <array>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pano/errors.hpp"
#include "pano/matrix.hpp"
#include "pano/priors.hpp"
#include "pano/remap.hpp"
#include "pano/tensor.hpp"

namespace pano {

/// Multi-head projections. Head h uses columns [h*d/heads, (h+1)*d/heads) of
/// the query/key/value matrices; `out` maps the concatenated heads back to d.
struct AttentionParams {
    int model_dim = 0;
    int heads = 1;
    Matrix query;  // d x d
    Matrix key;    // d x d
    Matrix value;  // d x d
    Matrix out;    // d x d
    std::vector<double> alpha;  // one CLE coefficient per head

    int head_dim() const noexcept { return model_dim / heads; }
};

inline void validate(const AttentionParams& p) {
    if (p.model_dim < 1 || p.heads < 1 || p.model_dim % p.heads != 0) {
        throw ConfigError("AttentionParams: model_dim " + std::to_string(p.model_dim) +
                          " not divisible into " + std::to_string(p.heads) + " heads");
    }
    for (const Matrix* m : {&p.query, &p.key, &p.value, &p.out}) {
        if (m->rows() != p.model_dim || m->cols() != p.model_dim) {
            throw ShapeError("AttentionParams: projection is " + dims(*m) + ", expected d x d");
        }
        for (double x : m->data())
            if (!std::isfinite(x)) throw DomainError("AttentionParams: non-finite projection entry");
    }
    if (static_cast<int>(p.alpha.size()) != p.heads) {
        throw ConfigError("AttentionParams: need one alpha per head");
    }
}

/// A tensor cut into N x N windows. Windows are ordered row-major over the
/// window lattice; each holds N^2 tokens (row-major inside the window) x C.
struct WindowPartition {
    WindowSpec spec{};
    int channels = 0;
    std::vector<Matrix> windows;

    int window_row_of(std::size_t index) const noexcept {
        return static_cast<int>(index) / spec.window_cols();
    }
};

inline WindowPartition window_partition(const ErpTensor& t, const WindowSpec& spec) {
    if (t.shape() != spec.shape) {
        throw ShapeError("window_partition: tensor " + to_string(t.shape()) + " vs spec " + to_string(spec.shape));
    }
    validate(spec);
    const int n = spec.n;
    WindowPartition part{spec, t.channels(), {}};
    part.windows.reserve(static_cast<std::size_t>(spec.window_rows()) * spec.window_cols());
    for (int wr = 0; wr < spec.window_rows(); ++wr) {
        for (int wc = 0; wc < spec.window_cols(); ++wc) {
            Matrix w(n * n, t.channels());
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < n; ++c)
                    for (int ch = 0; ch < t.channels(); ++ch) w(r * n + c, ch) = t.at(ch, wr * n + r, wc * n + c);
            part.windows.push_back(std::move(w));
        }
    }
    return part;
}

inline ErpTensor window_merge(const WindowPartition& part) {
    const WindowSpec& spec = part.spec;
    validate(spec);
    if (part.windows.size() != static_cast<std::size_t>(spec.window_rows()) * spec.window_cols()) {
        throw ShapeError("window_merge: wrong window count");
    }
    const int n = spec.n;
    ErpTensor t(part.channels, spec.shape);
    for (std::size_t idx = 0; idx < part.windows.size(); ++idx) {
        const Matrix& w = part.windows[idx];
        if (w.rows() != n * n || w.cols() != part.channels) throw ShapeError("window_merge: window is " + dims(w));
        const int wr = static_cast<int>(idx) / spec.window_cols();
        const int wc = static_cast<int>(idx) % spec.window_cols();
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c)
                for (int ch = 0; ch < part.channels; ++ch) t.at(ch, wr * n + r, wc * n + c) = w(r * n + c, ch);
    }
    return t;
}

/// Softmax attention weights of one head for one window, with an optional
/// additive logit bias (pass an empty matrix for none).
inline Matrix attention_weights(const Matrix& tokens, const AttentionParams& p, int head, const Matrix& bias) {
    const int hd = p.head_dim();
    const Matrix q = matmul(tokens, column_block(p.query, head * hd, hd));
    const Matrix k = matmul(tokens, column_block(p.key, head * hd, hd));
    Matrix logits = matmul_transposed(q, k);
    const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
    const bool biased = bias.rows() != 0;
    if (biased && (bias.rows() != logits.rows() || bias.cols() != logits.cols())) {
        throw ShapeError("attention bias is " + dims(bias) + ", logits are " + dims(logits));
    }
    for (int i = 0; i < logits.rows(); ++i)
        for (int j = 0; j < logits.cols(); ++j) logits(i, j) = logits(i, j) * scale + (biased ? bias(i, j) : 0.0);
    softmax_rows(logits);
    return logits;
}

/// Multi-head attention over one window's tokens; `table` may be null for
/// unbiased attention.
inline Matrix window_attention(const Matrix& tokens, const AttentionParams& p, const CleTable* table) {
    if (tokens.cols() != p.model_dim) {
        throw ShapeError("window_attention: token dim " + std::to_string(tokens.cols()) + " vs model dim " +
                         std::to_string(p.model_dim));
    }
    const int hd = p.head_dim();
    Matrix concat(tokens.rows(), p.model_dim);
    for (int h = 0; h < p.heads; ++h) {
        const Matrix bias = table ? cle_bias(*table, p.alpha[h]) : Matrix();
        const Matrix weights = attention_weights(tokens, p, h, bias);
        const Matrix head_out = matmul(weights, matmul(tokens, column_block(p.value, h * hd, hd)));
        for (int r = 0; r < head_out.rows(); ++r)
            for (int c = 0; c < hd; ++c) concat(r, h * hd + c) = head_out(r, c);
    }
    return matmul(concat, p.out);
}

/// SPAttention: window attention with the CLE bias of each window's row.
/// `tables[r]` must be the table for window row r.
inline WindowPartition sp_attention(const WindowPartition& w, const AttentionParams& params,
                                    std::span<const CleTable> tables) {
    validate(params);
    if (w.channels != params.model_dim) {
        throw ShapeError("sp_attention: " + std::to_string(w.channels) + " channels vs model dim " +
                         std::to_string(params.model_dim));
    }
    for (int r = 0; r < w.spec.window_rows(); ++r) {
        if (r >= static_cast<int>(tables.size()) || tables[r].window_row != r || tables[r].n != w.spec.n) {
            throw ConfigError("sp_attention: missing CLE table for window row " + std::to_string(r));
        }
    }
    WindowPartition out{w.spec, w.channels, {}};
    out.windows.reserve(w.windows.size());
    for (std::size_t i = 0; i < w.windows.size(); ++i) {
        out.windows.push_back(window_attention(w.windows[i], params, &tables[w.window_row_of(i)]));
    }
    return out;
}

// SPDecoder block ------------------------------------------------------------

enum class DecoderStage {
    LocalAttention,        // SPAttention
    RotatedAttention,      // rotate by n/2, SPAttention, rotate back
    Reproject,             // BRP
    ReprojectedAttention,  // rotate by n/2, SPAttention, rotate back (on the BRP view)
    ReprojectInverse,      // inverse BRP
};

inline constexpr std::array<DecoderStage, 5> kDecoderStages = {
    DecoderStage::LocalAttention, DecoderStage::RotatedAttention, DecoderStage::Reproject,
    DecoderStage::ReprojectedAttention, DecoderStage::ReprojectInverse};

struct DecoderBlockConfig {
    int window = 0;

    int rotation() const noexcept { return window / 2; }
};

/// One attention parameter set per attention stage.
struct DecoderBlockParams {
    AttentionParams local;
    AttentionParams rotated;
    AttentionParams reprojected;
};

using StageObserver = std::function<void(DecoderStage, const ErpTensor&)>;

/// x + SPAttention(x).
inline ErpTensor residual_sp_attention(const ErpTensor& x, const AttentionParams& params,
                                       std::span<const CleTable> tables, int n) {
    const WindowSpec spec{n, x.shape()};
    return x + window_merge(sp_attention(window_partition(x, spec), params, tables));
}

/// Applies the five SPDecoder stages in order. `observer`, when set, sees the
/// tensor after each stage.
inline ErpTensor spdecoder_block(const ErpTensor& t, const DecoderBlockParams& params, const DecoderBlockConfig& cfg,
                                 const StageObserver& observer = {}) {
    if (t.width() != 2 * t.height()) throw ShapeError("spdecoder_block: need W = 2H, got " + to_string(t.shape()));
    const WindowSpec spec{cfg.window, t.shape()};
    validate(spec);
    const std::vector<CleTable> tables = cle_tables(spec);
    const int n = cfg.window;
    const int shift = cfg.rotation();

    ErpTensor x = t;
    for (DecoderStage stage : kDecoderStages) {
        switch (stage) {
            case DecoderStage::LocalAttention:
                x = residual_sp_attention(x, params.local, tables, n);
                break;
            case DecoderStage::RotatedAttention:
                x = circular_rotate_inverse(residual_sp_attention(circular_rotate(x, shift), params.rotated, tables, n),
                                            shift);
                break;
            case DecoderStage::Reproject:
                x = brp(x);
                break;
            case DecoderStage::ReprojectedAttention:
                x = circular_rotate_inverse(
                    residual_sp_attention(circular_rotate(x, shift), params.reprojected, tables, n), shift);
                break;
            case DecoderStage::ReprojectInverse:
                x = brp_inverse(x);
                break;
        }
        if (observer) observer(stage, x);
    }
    return x;
}

// Decoder ----------------------------------------------------------------------

struct DecoderLevelParams {
    Matrix lateral;  // C_k x d, maps the skip feature into the decoder width
    DecoderBlockParams block;
};

struct DecoderParams {
    int model_dim = 0;
    int window = 0;  // requested window; coarse levels use min(window, H_k)
    std::array<DecoderLevelParams, kPyramidLevels> levels;
    Matrix head;  // d x 1
    double head_bias = 0.0;
};

/// Right-multiplies every pixel's channel vector by `m` (C x C').
inline ErpTensor project_channels(const ErpTensor& t, const Matrix& m) {
    return unflatten_tokens(matmul(flatten_tokens(t), m), t.shape());
}

inline double softplus(double x) noexcept {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline int level_window(int requested, int level_height) noexcept {
    return std::min(requested, level_height);
}

/// Coarse-to-fine decoding: at each level add the GCPE, run an SPDecoder
/// block, upsample and add the next skip feature. A final 1-channel head with
/// softplus gives strictly positive depth at twice the finest level's size.
inline ErpTensor decoder_forward(const FeaturePyramid& pyramid, const std::array<ErpTensor, kPyramidLevels>& gcpes,
                                 const DecoderParams& params) {
    validate(pyramid);
    const int d = params.model_dim;
    if (params.head.rows() != d || params.head.cols() != 1) throw ShapeError("decoder head must be d x 1");
    for (int k = 0; k < kPyramidLevels; ++k) {
        if (gcpes[k].shape() != pyramid.levels[k].shape() || gcpes[k].channels() != d) {
            throw ShapeError("decoder_forward: GCPE " + std::to_string(k) + " does not match its level");
        }
    }

    ErpTensor x;
    for (int k = kPyramidLevels - 1; k >= 0; --k) {
        const DecoderLevelParams& lp = params.levels[k];
        const ErpTensor& feature = pyramid.levels[k];
        if (lp.lateral.rows() != feature.channels() || lp.lateral.cols() != d) {
            throw ShapeError("decoder_forward: lateral projection " + std::to_string(k) + " is " + dims(lp.lateral));
        }
        ErpTensor skip = project_channels(feature, lp.lateral);
        x = (k == kPyramidLevels - 1) ? std::move(skip) : upsample2x(x) + skip;
        x = x + gcpes[k];
        x = spdecoder_block(x, lp.block, {level_window(params.window, feature.height())});
    }
    ErpTensor depth = project_channels(upsample2x(x), params.head);
    for (double& v : depth.data()) v = softplus(v + params.head_bias);
    return depth;
}

}  // namespace pano
