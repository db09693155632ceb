#pragma once

// Desk-scale dual encoder. Text: token embeddings -> mean pool -> two-layer
// ReLU MLP -> unit norm. Image: precomputed feature vector -> linear
// projector -> unit norm. Non-visual text is anchored to the embedding of a
// fixed random NULL feature vector pushed through the same projector, and
// the visualness score of a sentence is 1 - <NULL embedding, text embedding>.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "vizscore/core.hpp"
#include "vizscore/tokenize.hpp"
#include "vizscore/types.hpp"

namespace vizscore {

struct ModelConfig {
    std::vector<std::string> vocab;  // ordered; row |vocab| is the shared unknown-token row
    int d_tok = 64;
    int d_hidden = 128;
    int d_out = 32;
    int d_img = 64;
    std::uint64_t null_seed = 20;
    int max_tokens = 77;

    void check() const {
        if (vocab.empty()) throw precondition_error("BadConfig", "vocab must be non-empty");
        if (d_tok <= 0 || d_hidden <= 0 || d_out <= 0 || d_img <= 0 || max_tokens <= 0) {
            throw precondition_error("BadConfig", "all dimensions must be positive");
        }
    }
};

// Every trainable parameter of the model. Doubles as the gradient container
// and the Adam moment containers, which all share this shape.
struct ParamSet {
    Matrix token_embeddings;  // [|vocab|+1 x d_tok]
    Matrix w1;                // [d_tok x d_hidden]
    RawVector b1;             // [d_hidden]
    Matrix w2;                // [d_hidden x d_out]
    RawVector b2;             // [d_out]
    Matrix w_img;             // [d_img x d_out]
    RawVector b_img;          // [d_out]
    double log_inv_tau = 0.0;

    static ParamSet zeros_like(const ModelConfig& cfg) {
        ParamSet p;
        p.token_embeddings = Matrix(cfg.vocab.size() + 1, static_cast<std::size_t>(cfg.d_tok));
        p.w1 = Matrix(static_cast<std::size_t>(cfg.d_tok), static_cast<std::size_t>(cfg.d_hidden));
        p.b1.assign(static_cast<std::size_t>(cfg.d_hidden), 0.0);
        p.w2 = Matrix(static_cast<std::size_t>(cfg.d_hidden), static_cast<std::size_t>(cfg.d_out));
        p.b2.assign(static_cast<std::size_t>(cfg.d_out), 0.0);
        p.w_img = Matrix(static_cast<std::size_t>(cfg.d_img), static_cast<std::size_t>(cfg.d_out));
        p.b_img.assign(static_cast<std::size_t>(cfg.d_out), 0.0);
        p.log_inv_tau = 0.0;
        return p;
    }
};

// Flat coordinate view in a fixed order; shared by the optimizer and by the
// finite-difference checks so both walk parameters identically.
template <typename Fn>
void for_each_coord(ParamSet& p, Fn&& fn) {
    for (double& x : p.token_embeddings.data()) fn(x);
    for (double& x : p.w1.data()) fn(x);
    for (double& x : p.b1) fn(x);
    for (double& x : p.w2.data()) fn(x);
    for (double& x : p.b2) fn(x);
    for (double& x : p.w_img.data()) fn(x);
    for (double& x : p.b_img) fn(x);
    fn(p.log_inv_tau);
}

inline std::vector<double*> param_coords(ParamSet& p) {
    std::vector<double*> out;
    for_each_coord(p, [&](double& x) { out.push_back(&x); });
    return out;
}

inline constexpr double kMinInvTau = 1.0;
inline constexpr double kMaxInvTau = 100.0;

struct ModelCheckpoint {
    ModelConfig config;
    ParamSet params;
    RawVector null_features;  // fixed (non-trainable), dim d_img

    // Derived lookup; rebuild after mutating config.vocab.
    std::unordered_map<std::string, int> token_index;

    int unknown_row() const { return static_cast<int>(config.vocab.size()); }

    int token_row(const std::string& token) const {
        auto it = token_index.find(token);
        return it == token_index.end() ? unknown_row() : it->second;
    }

    double inv_tau() const { return std::exp(params.log_inv_tau); }
};

inline void rebuild_token_index(ModelCheckpoint& m) {
    m.token_index.clear();
    m.token_index.reserve(m.config.vocab.size());
    for (std::size_t i = 0; i < m.config.vocab.size(); ++i) {
        m.token_index.emplace(m.config.vocab[i], static_cast<int>(i));
    }
}

// Fresh checkpoint: weights uniform in +-1/sqrt(fan_in), biases zero,
// 1/tau = 1/0.07 (clamped into [1, 100]), NULL features drawn from
// null_seed. Draw order: token embeddings, w1, w2, w_img, each row-major.
inline ModelCheckpoint init_checkpoint(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.check();
    ModelCheckpoint m;
    m.config = cfg;
    m.params = ParamSet::zeros_like(cfg);
    Rng rng(seed);
    const auto fill = [&](Matrix& w, int fan_in) {
        const double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (double& x : w.data()) x = a * rng.uniform_pm1();
    };
    fill(m.params.token_embeddings, cfg.d_tok);
    fill(m.params.w1, cfg.d_tok);
    fill(m.params.w2, cfg.d_hidden);
    fill(m.params.w_img, cfg.d_img);
    m.params.log_inv_tau = std::clamp(std::log(1.0 / 0.07), std::log(kMinInvTau), std::log(kMaxInvTau));
    m.null_features = seeded_random_vector(cfg.null_seed, static_cast<std::size_t>(cfg.d_img));
    rebuild_token_index(m);
    return m;
}

namespace detail {

// out[j] = b[j] + sum_i w(i, j) * in[i]
inline RawVector affine(const Matrix& w, const RawVector& b, const RawVector& in) {
    RawVector out = b;
    for (std::size_t i = 0; i < w.rows(); ++i) {
        const double xi = in[i];
        if (xi == 0.0) continue;
        for (std::size_t j = 0; j < w.cols(); ++j) out[j] += w(i, j) * xi;
    }
    return out;
}

// Intermediate activations kept for backpropagation.
struct TextForward {
    std::vector<int> token_rows;  // after truncation; repeated rows appear repeatedly
    RawVector pooled;             // mean of token embedding rows
    RawVector h_pre;              // w1^T pooled + b1
    RawVector h;                  // relu(h_pre)
    RawVector out_raw;            // w2^T h + b2
    double out_norm = 0.0;
    RawVector embedding;          // out_raw / ||out_raw||
};

struct ImageForward {
    RawVector features;
    RawVector out_raw;  // w_img^T features + b_img
    double out_norm = 0.0;
    RawVector embedding;
};

inline TextForward encode_text_forward(const ModelCheckpoint& m, const std::string& text) {
    auto tokens = tokenize(text);
    if (tokens.size() > static_cast<std::size_t>(m.config.max_tokens)) {
        tokens.resize(static_cast<std::size_t>(m.config.max_tokens));
    }
    if (tokens.empty()) {
        throw precondition_error("EmptyText", "text has no tokens after tokenization");
    }
    TextForward fwd;
    fwd.token_rows.reserve(tokens.size());
    for (const auto& tok : tokens) fwd.token_rows.push_back(m.token_row(tok));

    const auto d_tok = static_cast<std::size_t>(m.config.d_tok);
    fwd.pooled.assign(d_tok, 0.0);
    for (int row : fwd.token_rows) {
        for (std::size_t j = 0; j < d_tok; ++j) {
            fwd.pooled[j] += m.params.token_embeddings(static_cast<std::size_t>(row), j);
        }
    }
    const double inv_count = 1.0 / static_cast<double>(fwd.token_rows.size());
    for (double& x : fwd.pooled) x *= inv_count;

    fwd.h_pre = affine(m.params.w1, m.params.b1, fwd.pooled);
    fwd.h = fwd.h_pre;
    for (double& x : fwd.h) x = std::max(x, 0.0);
    fwd.out_raw = affine(m.params.w2, m.params.b2, fwd.h);

    fwd.out_norm = l2_norm(fwd.out_raw);
    const UnitEmbedding e = normalize(fwd.out_raw);
    fwd.embedding = e.values();
    return fwd;
}

inline ImageForward encode_image_forward(const ModelCheckpoint& m, const RawVector& features) {
    if (features.size() != static_cast<std::size_t>(m.config.d_img)) {
        throw precondition_error("DimensionMismatch",
                                 "image features have dim " + std::to_string(features.size()) +
                                     ", model expects " + std::to_string(m.config.d_img));
    }
    check_finite(features, "image features");
    ImageForward fwd;
    fwd.features = features;
    fwd.out_raw = affine(m.params.w_img, m.params.b_img, features);
    fwd.out_norm = l2_norm(fwd.out_raw);
    const UnitEmbedding e = normalize(fwd.out_raw);
    fwd.embedding = e.values();
    return fwd;
}

}  // namespace detail

inline UnitEmbedding encode_text(const ModelCheckpoint& m, const std::string& text) {
    return normalize(detail::encode_text_forward(m, text).out_raw);
}

inline UnitEmbedding encode_image(const ModelCheckpoint& m, const RawVector& features) {
    return normalize(detail::encode_image_forward(m, features).out_raw);
}

inline UnitEmbedding null_embedding(const ModelCheckpoint& m) {
    return encode_image(m, m.null_features);
}

// Visualness S = 1 - <NULL embedding, text embedding>, in [0, 2]. Text that
// embeds onto the NULL direction scores 0; antipodal text scores 2.
struct VisualnessScore {
    double value = 0.0;
};

inline VisualnessScore visualness_score(const ModelCheckpoint& m, const std::string& text) {
    return {1.0 - inner(null_embedding(m), encode_text(m, text))};
}

// Boundary convention: a score exactly at the threshold is visual.
inline Label classify(VisualnessScore s, double threshold) {
    if (!(threshold >= 0.0 && threshold <= 2.0)) {
        throw precondition_error("InvalidThreshold", "threshold must lie in [0, 2]");
    }
    return s.value >= threshold ? Label::visual : Label::non_visual;
}

// Candidates in descending cosine similarity to the text embedding; ties
// keep input order.
inline std::vector<std::string> rank_images(
    const ModelCheckpoint& m, const std::string& text,
    const std::vector<std::pair<std::string, RawVector>>& candidates) {
    if (candidates.empty()) {
        throw precondition_error("EmptyCandidates", "rank_images needs at least one candidate");
    }
    const UnitEmbedding t = encode_text(m, text);
    std::vector<double> scores;
    scores.reserve(candidates.size());
    for (const auto& [id, features] : candidates) {
        scores.push_back(inner(encode_image(m, features), t));
    }
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<std::string> ranked;
    ranked.reserve(order.size());
    for (std::size_t i : order) ranked.push_back(candidates[i].first);
    return ranked;
}

}  // namespace vizscore
