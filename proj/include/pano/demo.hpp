#pragma once

// Seeded end-to-end toy pipeline: a random feature pyramid and random
// parameters drive gcpe_forward and decoder_forward.
//
// Draw order from the SplitMix64 stream (fixed, part of the contract):
//   1. pyramid levels 0..4, each in tensor storage order
//   2. GCPE: token_proj, global_query, global_key, global_value,
//      alpha_global, key_proj[0..4], query_proj[0..4], out_proj
//   3. decoder levels 0..4: lateral, then local / rotated / reprojected
//      attention (query, key, value, out, alpha per head)
//   4. decoder head, then head bias
// Projection entries are uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)); alphas
// uniform in [0, 2); head bias uniform in [-1, 1).

#include <array>
#include <cmath>
#include <cstdint>

#include "pano/priors.hpp"
#include "pano/random.hpp"
#include "pano/spattention.hpp"

namespace pano {

struct DemoConfig {
    std::uint64_t seed = 0;
    int height = 64;
    int window = 8;
    int model_dim = 8;
    int heads = 2;
    std::array<int, kPyramidLevels> channels = {4, 6, 8, 12, 16};
};

struct DemoModel {
    FeaturePyramid pyramid;
    GcpeParams gcpe;
    DecoderParams decoder;
};

struct DemoResult {
    DemoModel model;
    GcpeOutput gcpe;
    ErpTensor depth;
};

namespace detail {

inline Matrix init_projection(SplitMix64& rng, int rows, int cols) {
    return random_matrix(rng, rows, cols, 1.0 / std::sqrt(static_cast<double>(rows)));
}

inline AttentionParams init_attention(SplitMix64& rng, int d, int heads) {
    AttentionParams p;
    p.model_dim = d;
    p.heads = heads;
    p.query = init_projection(rng, d, d);
    p.key = init_projection(rng, d, d);
    p.value = init_projection(rng, d, d);
    p.out = init_projection(rng, d, d);
    for (int h = 0; h < heads; ++h) p.alpha.push_back(rng.uniform(0.0, 2.0));
    return p;
}

}  // namespace detail

inline DemoModel build_demo_model(const DemoConfig& cfg) {
    if (cfg.height < 32 || cfg.height % 32 != 0) {
        throw ConfigError("demo height must be a positive multiple of 32, got " + std::to_string(cfg.height));
    }
    if (cfg.window < 1) throw ConfigError("demo window must be positive");
    const auto shapes = pyramid_shapes({cfg.height, 2 * cfg.height});
    for (const GridShape& s : shapes) {
        const int n = level_window(cfg.window, s.height);
        if (s.height % n != 0 || s.width % n != 0) {
            throw ConfigError("window " + std::to_string(cfg.window) + " does not tile pyramid level " + to_string(s));
        }
    }

    SplitMix64 rng(cfg.seed);
    const int d = cfg.model_dim;
    DemoModel m;
    for (int k = 0; k < kPyramidLevels; ++k) m.pyramid.levels[k] = random_tensor(rng, cfg.channels[k], shapes[k]);

    GcpeParams& g = m.gcpe;
    g.model_dim = d;
    g.token_proj = detail::init_projection(rng, cfg.channels[kReferenceLevel], d);
    g.global_query = detail::init_projection(rng, d, d);
    g.global_key = detail::init_projection(rng, d, d);
    g.global_value = detail::init_projection(rng, d, d);
    g.alpha_global = rng.uniform(0.0, 2.0);
    for (int k = 0; k < kPyramidLevels; ++k) g.key_proj[k] = detail::init_projection(rng, d, d);
    for (int k = 0; k < kPyramidLevels; ++k) g.query_proj[k] = detail::init_projection(rng, cfg.channels[k], d);
    g.out_proj = detail::init_projection(rng, d, d);

    DecoderParams& dec = m.decoder;
    dec.model_dim = d;
    dec.window = cfg.window;
    for (int k = 0; k < kPyramidLevels; ++k) {
        DecoderLevelParams& lp = dec.levels[k];
        lp.lateral = detail::init_projection(rng, cfg.channels[k], d);
        lp.block.local = detail::init_attention(rng, d, cfg.heads);
        lp.block.rotated = detail::init_attention(rng, d, cfg.heads);
        lp.block.reprojected = detail::init_attention(rng, d, cfg.heads);
    }
    dec.head = detail::init_projection(rng, d, 1);
    dec.head_bias = rng.uniform(-1.0, 1.0);
    return m;
}

inline DemoResult run_demo(const DemoConfig& cfg) {
    DemoResult r{build_demo_model(cfg), {}, {}};
    const auto gspe = cached_gspe_matrix(r.model.pyramid.reference().shape());
    r.gcpe = gcpe_forward(r.model.pyramid, r.model.gcpe, *gspe);
    r.depth = decoder_forward(r.model.pyramid, r.gcpe.embeddings, r.model.decoder);
    return r;
}

}  // namespace pano
