#pragma once

// Distant supervision: converts per-page sentence-image similarity matrices
// into visual/non-visual training pairs, and aggregates Likert annotations
// into labels.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "vizscore/core.hpp"
#include "vizscore/types.hpp"

namespace vizscore {

struct PageImage {
    std::string image_id;
    RawVector features;  // may be empty when the similarity matrix is precomputed
};

struct PageRecord {
    std::string page_id;
    std::vector<std::string> sentences;
    std::vector<PageImage> images;
    Matrix similarity;  // [n_sentences x n_images]

    void check() const {
        if (similarity.rows() != sentences.size() || similarity.cols() != images.size()) {
            throw precondition_error("ShapeMismatch",
                                     "page '" + page_id + "': similarity matrix is " +
                                         std::to_string(similarity.rows()) + "x" +
                                         std::to_string(similarity.cols()) + ", expected " +
                                         std::to_string(sentences.size()) + "x" +
                                         std::to_string(images.size()));
        }
        for (double s : similarity.data()) {
            if (!std::isfinite(s) || s < -1.0 || s > 1.0) {
                throw precondition_error("BadSimilarity",
                                         "page '" + page_id + "': similarity outside [-1, 1]");
            }
        }
    }
};

struct AnnotationRecord {
    std::string text;
    std::vector<int> ratings;  // 7-point Likert, each in 1..7
};

enum class AggregateLabel { visual, non_visual, neutral, ambiguous };

inline const char* to_string(AggregateLabel l) {
    switch (l) {
        case AggregateLabel::visual: return "visual";
        case AggregateLabel::non_visual: return "non-visual";
        case AggregateLabel::neutral: return "neutral";
        default: return "ambiguous";
    }
}

struct AutoLabelResult {
    std::vector<LabeledExample> positives;
    std::vector<LabeledExample> negatives;
    std::size_t discarded = 0;
};

// A sentence becomes a positive paired with its most similar image when any
// similarity exceeds t_pos, a negative (NULL marker) when every similarity
// is below t_neg, and is discarded otherwise. Argmax ties break toward the
// lowest image index. Pages without images yield negatives: the max over an
// empty set is -inf, which is below any t_neg.
inline AutoLabelResult auto_label(const std::vector<PageRecord>& pages, double t_pos,
                                  double t_neg) {
    if (!(t_pos > t_neg)) {
        throw precondition_error("InvalidThresholds", "t_pos must exceed t_neg");
    }
    AutoLabelResult result;
    for (const auto& page : pages) {
        page.check();
        for (std::size_t s = 0; s < page.sentences.size(); ++s) {
            double best = -std::numeric_limits<double>::infinity();
            std::size_t best_img = 0;
            for (std::size_t j = 0; j < page.images.size(); ++j) {
                if (page.similarity(s, j) > best) {
                    best = page.similarity(s, j);
                    best_img = j;
                }
            }
            if (best > t_pos) {
                result.positives.push_back(
                    {page.sentences[s], Label::visual, page.images[best_img].image_id});
            } else if (best < t_neg) {
                result.negatives.push_back({page.sentences[s], Label::non_visual, std::nullopt});
            } else {
                ++result.discarded;
            }
        }
    }
    return result;
}

// Linearly interpolated quantile of sorted order statistics:
// q(p) = x[i] + frac * (x[i+1] - x[i]) with i = floor((n-1) p).
inline double interpolated_quantile(std::vector<double> xs, double p) {
    std::sort(xs.begin(), xs.end());
    const double pos = p * static_cast<double>(xs.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= xs.size()) return xs.back();
    const double frac = pos - static_cast<double>(i);
    return xs[i] + frac * (xs[i + 1] - xs[i]);
}

// Thresholds that keep the top `top_frac` of per-sentence max similarities
// above t_pos and the bottom `bottom_frac` below t_neg.
inline std::pair<double, double> percentile_thresholds(const std::vector<double>& all_max_sims,
                                                       double top_frac, double bottom_frac) {
    if (all_max_sims.empty()) {
        throw precondition_error("EmptyInput", "percentile thresholds need at least one value");
    }
    if (!(top_frac > 0.0) || !(bottom_frac > 0.0) || !(top_frac + bottom_frac < 1.0)) {
        throw precondition_error("InvalidFractions",
                                 "need top_frac > 0, bottom_frac > 0, top_frac + bottom_frac < 1");
    }
    const double t_pos = interpolated_quantile(all_max_sims, 1.0 - top_frac);
    const double t_neg = interpolated_quantile(all_max_sims, bottom_frac);
    return {t_pos, t_neg};
}

// Majority rule generalized to any rater count: with n raters the majority
// is ceil((n+1)/2); 9 raters reproduce the 5-of-9 rule. Low = {1,2,3},
// high = {5,6,7}, neutral = {4}; no majority anywhere is ambiguous.
inline AggregateLabel aggregate_annotations(const AnnotationRecord& rec) {
    if (rec.ratings.empty()) {
        throw precondition_error("InvalidRating", "annotation '" + rec.text + "' has no ratings");
    }
    std::size_t low = 0, neutral = 0, high = 0;
    for (int r : rec.ratings) {
        if (r < 1 || r > 7) {
            throw precondition_error("InvalidRating",
                                     "rating " + std::to_string(r) + " outside 1..7");
        }
        if (r <= 3) {
            ++low;
        } else if (r == 4) {
            ++neutral;
        } else {
            ++high;
        }
    }
    const std::size_t majority = (rec.ratings.size() + 2) / 2;  // ceil((n+1)/2)
    if (low >= majority) return AggregateLabel::non_visual;
    if (high >= majority) return AggregateLabel::visual;
    if (neutral >= majority) return AggregateLabel::neutral;
    return AggregateLabel::ambiguous;
}

}  // namespace vizscore
