#pragma once

// Spherical-distance position priors: per-window curve local embedding (CLE)
// tables, the global spherical position embedding (GSPE) matrix, and the
// query-based global conditional position embedding (GCPE) module.

#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "pano/errors.hpp"
#include "pano/matrix.hpp"
#include "pano/sphere.hpp"
#include "pano/tensor.hpp"

namespace pano {

/// N x N attention windows tiling a grid.
struct WindowSpec {
    int n = 0;
    GridShape shape{};

    int window_rows() const noexcept { return shape.height / n; }
    int window_cols() const noexcept { return shape.width / n; }
    int tokens() const noexcept { return n * n; }
};

inline void validate(const WindowSpec& spec) {
    validate(spec.shape);
    if (spec.n < 1 || spec.shape.height % spec.n != 0 || spec.shape.width % spec.n != 0) {
        throw ShapeError("window " + std::to_string(spec.n) + " does not tile grid " + to_string(spec.shape));
    }
}

/// Pairwise great-circle distances between the N^2 pixels of one window
/// (tokens ordered row-major inside the window).
struct CleTable {
    int window_row = 0;
    int n = 0;
    Matrix dist;
};

/// Distances are computed for the window at column 0; they hold for every
/// window in the same row because distance depends only on the longitude gap.
inline CleTable cle_window_distances(const WindowSpec& spec, int window_row) {
    validate(spec);
    if (window_row < 0 || window_row >= spec.window_rows()) {
        throw DomainError("cle_window_distances: window row " + std::to_string(window_row) +
                          " outside [0, " + std::to_string(spec.window_rows()) + ")");
    }
    const int n = spec.n;
    std::vector<SphCoord> coords;
    coords.reserve(static_cast<std::size_t>(n) * n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) coords.push_back(pix_to_sph(pixel_center(window_row * n + r, c), spec.shape));

    CleTable table{window_row, n, Matrix(n * n, n * n)};
    for (int i = 0; i < n * n; ++i) {
        for (int j = i + 1; j < n * n; ++j) {
            const double d = haversine(coords[i], coords[j]);
            table.dist(i, j) = d;
            table.dist(j, i) = d;
        }
    }
    return table;
}

/// One table per window row, index = window row.
inline std::vector<CleTable> cle_tables(const WindowSpec& spec) {
    validate(spec);
    std::vector<CleTable> tables;
    tables.reserve(static_cast<std::size_t>(spec.window_rows()));
    for (int r = 0; r < spec.window_rows(); ++r) tables.push_back(cle_window_distances(spec, r));
    return tables;
}

/// Additive attention-logit bias: -alpha * distance.
inline Matrix cle_bias(const CleTable& table, double alpha) {
    if (!std::isfinite(alpha)) throw DomainError("cle_bias: alpha must be finite");
    Matrix bias(table.dist.rows(), table.dist.cols());
    auto src = table.dist.data();
    auto dst = bias.data();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = -alpha * src[i];
    return bias;
}

/// Pairwise great-circle distances between every pixel center of a grid,
/// flattened row-major.
struct GspeMatrix {
    GridShape shape{};
    Matrix dist;
};

inline GspeMatrix gspe_matrix(GridShape shape) {
    validate(shape);
    const int m = static_cast<int>(shape.area());
    std::vector<SphCoord> coords;
    coords.reserve(static_cast<std::size_t>(m));
    for (int i = 0; i < shape.height; ++i)
        for (int j = 0; j < shape.width; ++j) coords.push_back(pix_to_sph(pixel_center(i, j), shape));

    GspeMatrix g{shape, Matrix(m, m)};
    for (int a = 0; a < m; ++a) {
        for (int b = a + 1; b < m; ++b) {
            const double d = haversine(coords[a], coords[b]);
            g.dist(a, b) = d;
            g.dist(b, a) = d;
        }
    }
    return g;
}

inline std::shared_ptr<const GspeMatrix> cached_gspe_matrix(GridShape shape) {
    static std::mutex mutex;
    static std::map<std::pair<int, int>, std::shared_ptr<const GspeMatrix>> cache;
    const auto key = std::make_pair(shape.height, shape.width);
    {
        std::lock_guard lock(mutex);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
    }
    auto g = std::make_shared<const GspeMatrix>(gspe_matrix(shape));
    std::lock_guard lock(mutex);
    return cache.emplace(key, std::move(g)).first->second;
}

// Feature pyramid ------------------------------------------------------------

inline constexpr int kPyramidLevels = 5;
// Level k (0-based) has stride 2^(k+1); the GCPE reference is the stride-16 level.
inline constexpr int kReferenceLevel = 3;

struct FeaturePyramid {
    std::array<ErpTensor, kPyramidLevels> levels;

    const ErpTensor& reference() const noexcept { return levels[kReferenceLevel]; }
};

/// Checks that each level halves the spatial dims of the previous one.
inline void validate(const FeaturePyramid& p) {
    for (int k = 1; k < kPyramidLevels; ++k) {
        const GridShape& fine = p.levels[k - 1].shape();
        const GridShape& coarse = p.levels[k].shape();
        if (fine.height != 2 * coarse.height || fine.width != 2 * coarse.width) {
            throw ShapeError("pyramid level " + std::to_string(k) + " is " + to_string(coarse) +
                             ", expected half of " + to_string(fine));
        }
    }
}

/// Spatial dims of every level for a panorama of the given size.
inline std::array<GridShape, kPyramidLevels> pyramid_shapes(GridShape full) {
    std::array<GridShape, kPyramidLevels> shapes{};
    for (int k = 0; k < kPyramidLevels; ++k) {
        const int stride = 2 << k;
        if (full.height % stride != 0 || full.width % stride != 0) {
            throw ShapeError("panorama " + to_string(full) + " is not divisible by stride " + std::to_string(stride));
        }
        shapes[k] = {full.height / stride, full.width / stride};
    }
    return shapes;
}

/// Tokens of a tensor as an (H*W) x C matrix, pixels row-major.
inline Matrix flatten_tokens(const ErpTensor& t) {
    Matrix m(static_cast<int>(t.shape().area()), t.channels());
    for (int c = 0; c < t.channels(); ++c) {
        auto ch = t.channel(c);
        for (std::size_t p = 0; p < ch.size(); ++p) m(static_cast<int>(p), c) = ch[p];
    }
    return m;
}

inline ErpTensor unflatten_tokens(const Matrix& tokens, GridShape shape) {
    if (tokens.rows() != shape.area()) {
        throw ShapeError("unflatten_tokens: " + std::to_string(tokens.rows()) + " tokens for grid " + to_string(shape));
    }
    ErpTensor t(tokens.cols(), shape);
    for (int c = 0; c < tokens.cols(); ++c) {
        auto ch = t.channel(c);
        for (std::size_t p = 0; p < ch.size(); ++p) ch[p] = tokens(static_cast<int>(p), c);
    }
    return t;
}

// GCPE -------------------------------------------------------------------------

/// Parameters of the query-based GCPE module. Matrices act on row vectors
/// (tokens x features) from the right.
struct GcpeParams {
    int model_dim = 0;
    Matrix token_proj;   // C_ref x d
    Matrix global_query; // d x d
    Matrix global_key;   // d x d
    Matrix global_value; // d x d
    double alpha_global = 0.0;
    std::array<Matrix, kPyramidLevels> key_proj;    // d x d each
    std::array<Matrix, kPyramidLevels> query_proj;  // C_k x d each
    Matrix out_proj;     // d x d
};

struct GcpeOutput {
    std::array<ErpTensor, kPyramidLevels> embeddings;  // d channels at each level's resolution
    Matrix global_key;                                  // M x d
    Matrix global_attention;                            // M x M
    std::array<Matrix, kPyramidLevels> query_attention; // (H_k W_k) x M
};

namespace detail {

inline void require_dims(const Matrix& m, int rows, int cols, const std::string& what) {
    if (m.rows() != rows || m.cols() != cols) {
        throw ShapeError(what + " is " + dims(m) + ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
    }
}

}  // namespace detail

/// Runs the global GSPE-biased attention block on the reference level, then
/// lets every pyramid level query the resulting global key.
inline GcpeOutput gcpe_forward(const FeaturePyramid& pyramid, const GcpeParams& params, const GspeMatrix& gspe) {
    validate(pyramid);
    const int d = params.model_dim;
    if (d < 1) throw ShapeError("gcpe_forward: model_dim must be positive");
    const ErpTensor& ref = pyramid.reference();
    if (ref.shape() != gspe.shape) {
        throw ShapeError("gcpe_forward: reference level " + to_string(ref.shape()) + " vs GSPE grid " +
                         to_string(gspe.shape));
    }
    if (!std::isfinite(params.alpha_global)) throw DomainError("gcpe_forward: alpha_global must be finite");
    detail::require_dims(params.token_proj, ref.channels(), d, "token_proj");
    detail::require_dims(params.global_query, d, d, "global_query");
    detail::require_dims(params.global_key, d, d, "global_key");
    detail::require_dims(params.global_value, d, d, "global_value");
    detail::require_dims(params.out_proj, d, d, "out_proj");

    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    GcpeOutput out;

    // Global block over the reference tokens.
    const Matrix tokens = matmul(flatten_tokens(ref), params.token_proj);
    const Matrix q = matmul(tokens, params.global_query);
    const Matrix k = matmul(tokens, params.global_key);
    const Matrix v = matmul(tokens, params.global_value);
    Matrix logits = matmul_transposed(q, k);
    for (int i = 0; i < logits.rows(); ++i)
        for (int j = 0; j < logits.cols(); ++j)
            logits(i, j) = logits(i, j) * scale - params.alpha_global * gspe.dist(i, j);
    softmax_rows(logits);
    out.global_key = matmul(logits, v);
    out.global_attention = std::move(logits);

    for (int level = 0; level < kPyramidLevels; ++level) {
        const ErpTensor& f = pyramid.levels[level];
        const std::string tag = "level " + std::to_string(level) + " ";
        detail::require_dims(params.key_proj[level], d, d, tag + "key_proj");
        detail::require_dims(params.query_proj[level], f.channels(), d, tag + "query_proj");

        const Matrix keys = matmul(out.global_key, params.key_proj[level]);
        const Matrix queries = matmul(flatten_tokens(f), params.query_proj[level]);
        Matrix attn = matmul_transposed(queries, keys);
        for (double& x : attn.data()) x *= scale;
        softmax_rows(attn);
        // The per-level keys double as values.
        out.embeddings[level] = unflatten_tokens(matmul(matmul(attn, keys), params.out_proj), f.shape());
        out.query_attention[level] = std::move(attn);
    }
    return out;
}

}  // namespace pano
