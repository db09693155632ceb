#pragma once

// The NULL-anchored symmetric contrastive objective and its analytic
// gradients, plus the classification-only variant used for ablations.
//
// For a batch of N (text, image) rows with unit embeddings T_k and I_j
// (I_j is the NULL embedding for non-visual rows) and temperature tau:
//
//   L = -(1/2N) sum_j log softmax_k(<I_j, T_k> / tau)[k = j]
//       -(1/2N) sum_k log softmax_j(<I_j, T_k> / tau)[j = k]
//
// Softmaxes subtract the max logit before exponentiation. The temperature
// is stored as log(1/tau) and is trainable.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "vizscore/core.hpp"
#include "vizscore/model.hpp"
#include "vizscore/types.hpp"

namespace vizscore {

struct Batch {
    std::vector<std::string> texts;
    std::vector<std::optional<RawVector>> image_features;  // empty optional = NULL marker
    std::vector<Label> labels;

    std::size_t size() const { return texts.size(); }

    void check() const {
        if (texts.empty()) throw precondition_error("EmptyBatch", "batch has no examples");
        if (image_features.size() != texts.size() || labels.size() != texts.size()) {
            throw precondition_error("BadBatch", "batch field lengths differ");
        }
        for (std::size_t i = 0; i < texts.size(); ++i) {
            if ((labels[i] == Label::visual) != image_features[i].has_value()) {
                throw precondition_error(
                    "BadBatch", "row " + std::to_string(i) +
                                    ": visual rows need features, non-visual rows the NULL marker");
            }
        }
    }
};

struct ObjectiveOptions {
    // When set, the image->text softmax for a non-visual text drops the
    // other NULL rows from its denominator (the formula as written rewards
    // distinguishing identical NULL keys). Off by default: the objective is
    // evaluated exactly as stated.
    bool mask_duplicate_nulls = false;
};

struct LossReport {
    double loss = 0.0;
    Matrix logits;  // logits(j, k) = <I_j, T_k> / tau
};

struct GradientReport {
    double loss = 0.0;
    ParamSet grads;
};

// Common anchor for the classification-only ablation.
inline RawVector default_common_visual_features(const ModelConfig& cfg) {
    return seeded_random_vector(21, static_cast<std::size_t>(cfg.d_img));
}

namespace detail {

enum class AnchorMode { per_example, common_visual };

struct ObjectiveEval {
    double loss = 0.0;
    Matrix logits;
    std::optional<ParamSet> grads;
};

inline ObjectiveEval eval_objective(const ModelCheckpoint& m, const Batch& batch, AnchorMode mode,
                                    const RawVector* common_features, const ObjectiveOptions& opts,
                                    bool want_grads) {
    batch.check();
    const std::size_t n = batch.size();

    // Forward passes. Non-visual rows anchor to the NULL features; in
    // common_visual mode every visual row anchors to the shared features.
    std::vector<TextForward> text_fwd;
    std::vector<ImageForward> image_fwd;
    text_fwd.reserve(n);
    image_fwd.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        text_fwd.push_back(encode_text_forward(m, batch.texts[i]));
        const RawVector* feats = nullptr;
        if (batch.labels[i] == Label::non_visual) {
            feats = &m.null_features;
        } else if (mode == AnchorMode::common_visual) {
            feats = common_features;
        } else {
            feats = &*batch.image_features[i];
        }
        image_fwd.push_back(encode_image_forward(m, *feats));
    }

    const double inv_tau = m.inv_tau();
    Matrix logits(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < n; ++k) {
            logits(j, k) = inv_tau * dot(image_fwd[j].embedding, text_fwd[k].embedding);
        }
    }

    // Column entry (j, k) participates in text k's softmax unless masking
    // removes a duplicate NULL row.
    const auto col_allowed = [&](std::size_t j, std::size_t k) {
        if (!opts.mask_duplicate_nulls || j == k) return true;
        return !(batch.labels[j] == Label::non_visual && batch.labels[k] == Label::non_visual);
    };

    const double neg_inf = -std::numeric_limits<double>::infinity();
    double loss = 0.0;
    Matrix p_row(n, n), p_col(n, n);

    for (std::size_t j = 0; j < n; ++j) {  // image -> text term, softmax over k
        double mx = neg_inf;
        for (std::size_t k = 0; k < n; ++k) mx = std::max(mx, logits(j, k));
        double denom = 0.0;
        for (std::size_t k = 0; k < n; ++k) denom += std::exp(logits(j, k) - mx);
        for (std::size_t k = 0; k < n; ++k) p_row(j, k) = std::exp(logits(j, k) - mx) / denom;
        loss -= logits(j, j) - mx - std::log(denom);
    }
    for (std::size_t k = 0; k < n; ++k) {  // text -> image term, softmax over j
        double mx = neg_inf;
        for (std::size_t j = 0; j < n; ++j) {
            if (col_allowed(j, k)) mx = std::max(mx, logits(j, k));
        }
        double denom = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (col_allowed(j, k)) denom += std::exp(logits(j, k) - mx);
        }
        for (std::size_t j = 0; j < n; ++j) {
            p_col(j, k) = col_allowed(j, k) ? std::exp(logits(j, k) - mx) / denom : 0.0;
        }
        loss -= logits(k, k) - mx - std::log(denom);
    }
    loss /= 2.0 * static_cast<double>(n);

    ObjectiveEval eval;
    eval.loss = loss;
    eval.logits = logits;
    if (!want_grads) return eval;

    ParamSet grads = ParamSet::zeros_like(m.config);
    const double scale = 1.0 / (2.0 * static_cast<double>(n));

    // d loss / d logits(j, k)
    Matrix g_logits(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < n; ++k) {
            double g = p_row(j, k) + p_col(j, k);
            if (j == k) g -= 2.0;
            g_logits(j, k) = scale * g;
        }
    }

    // Temperature: logits = exp(log_inv_tau) * <I, T>, so the chain rule
    // gives d loss / d log_inv_tau = sum g_logits * logits.
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < n; ++k) {
            grads.log_inv_tau += g_logits(j, k) * logits(j, k);
        }
    }

    // Gradients w.r.t. the unit embeddings.
    std::vector<RawVector> g_text(n), g_image(n);
    const auto d_out = static_cast<std::size_t>(m.config.d_out);
    for (std::size_t k = 0; k < n; ++k) g_text[k].assign(d_out, 0.0);
    for (std::size_t j = 0; j < n; ++j) g_image[j].assign(d_out, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < n; ++k) {
            const double w = inv_tau * g_logits(j, k);
            if (w == 0.0) continue;
            for (std::size_t d = 0; d < d_out; ++d) {
                g_text[k][d] += w * image_fwd[j].embedding[d];
                g_image[j][d] += w * text_fwd[k].embedding[d];
            }
        }
    }

    // x_hat = x / ||x||: dL/dx = (g - (g . x_hat) x_hat) / ||x||.
    const auto through_normalize = [](const RawVector& g, const RawVector& x_hat, double norm) {
        const double guarded = std::max(norm, kNormEpsilon);
        const double proj = dot(g, x_hat);
        RawVector out(g.size());
        for (std::size_t d = 0; d < g.size(); ++d) out[d] = (g[d] - proj * x_hat[d]) / guarded;
        return out;
    };

    for (std::size_t j = 0; j < n; ++j) {  // image projector
        const auto& fwd = image_fwd[j];
        const RawVector g_raw = through_normalize(g_image[j], fwd.embedding, fwd.out_norm);
        for (std::size_t d = 0; d < d_out; ++d) grads.b_img[d] += g_raw[d];
        for (std::size_t i = 0; i < fwd.features.size(); ++i) {
            const double fi = fwd.features[i];
            if (fi == 0.0) continue;
            for (std::size_t d = 0; d < d_out; ++d) grads.w_img(i, d) += fi * g_raw[d];
        }
    }

    const auto d_hidden = static_cast<std::size_t>(m.config.d_hidden);
    const auto d_tok = static_cast<std::size_t>(m.config.d_tok);
    for (std::size_t k = 0; k < n; ++k) {  // text encoder
        const auto& fwd = text_fwd[k];
        const RawVector g_out = through_normalize(g_text[k], fwd.embedding, fwd.out_norm);
        for (std::size_t d = 0; d < d_out; ++d) grads.b2[d] += g_out[d];
        RawVector g_h(d_hidden, 0.0);
        for (std::size_t i = 0; i < d_hidden; ++i) {
            const double hi = fwd.h[i];
            double acc = 0.0;
            for (std::size_t d = 0; d < d_out; ++d) {
                if (hi != 0.0) grads.w2(i, d) += hi * g_out[d];
                acc += m.params.w2(i, d) * g_out[d];
            }
            g_h[i] = fwd.h_pre[i] > 0.0 ? acc : 0.0;  // relu
        }
        for (std::size_t i = 0; i < d_hidden; ++i) grads.b1[i] += g_h[i];
        RawVector g_pooled(d_tok, 0.0);
        for (std::size_t i = 0; i < d_tok; ++i) {
            const double pi = fwd.pooled[i];
            double acc = 0.0;
            for (std::size_t h = 0; h < d_hidden; ++h) {
                if (pi != 0.0) grads.w1(i, h) += pi * g_h[h];
                acc += m.params.w1(i, h) * g_h[h];
            }
            g_pooled[i] = acc;
        }
        const double inv_count = 1.0 / static_cast<double>(fwd.token_rows.size());
        for (int row : fwd.token_rows) {
            for (std::size_t i = 0; i < d_tok; ++i) {
                grads.token_embeddings(static_cast<std::size_t>(row), i) +=
                    inv_count * g_pooled[i];
            }
        }
    }

    eval.grads = std::move(grads);
    return eval;
}

}  // namespace detail

inline LossReport contrastive_loss(const ModelCheckpoint& m, const Batch& batch,
                                   const ObjectiveOptions& opts = {}) {
    auto eval = detail::eval_objective(m, batch, detail::AnchorMode::per_example, nullptr, opts,
                                       /*want_grads=*/false);
    return {eval.loss, std::move(eval.logits)};
}

inline GradientReport contrastive_grad(const ModelCheckpoint& m, const Batch& batch,
                                       const ObjectiveOptions& opts = {}) {
    auto eval = detail::eval_objective(m, batch, detail::AnchorMode::per_example, nullptr, opts,
                                       /*want_grads=*/true);
    return {eval.loss, std::move(*eval.grads)};
}

inline LossReport classification_only_loss(const ModelCheckpoint& m, const Batch& batch,
                                           const RawVector& common_visual_features,
                                           const ObjectiveOptions& opts = {}) {
    auto eval = detail::eval_objective(m, batch, detail::AnchorMode::common_visual,
                                       &common_visual_features, opts, /*want_grads=*/false);
    return {eval.loss, std::move(eval.logits)};
}

inline GradientReport classification_only_grad(const ModelCheckpoint& m, const Batch& batch,
                                               const RawVector& common_visual_features,
                                               const ObjectiveOptions& opts = {}) {
    auto eval = detail::eval_objective(m, batch, detail::AnchorMode::common_visual,
                                       &common_visual_features, opts, /*want_grads=*/true);
    return {eval.loss, std::move(*eval.grads)};
}

}  // namespace vizscore
