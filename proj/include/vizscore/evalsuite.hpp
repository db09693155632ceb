#pragma once

// Evaluation metrics: macro precision/recall/F1 + accuracy, mean reciprocal
// rank, Pearson correlation, ordinal Krippendorff's alpha, z-score
// standardization, and model-based retrieval evaluation.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vizscore/core.hpp"
#include "vizscore/model.hpp"
#include "vizscore/types.hpp"

namespace vizscore {

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
};

struct MetricReport {
    double macro_f1 = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double accuracy = 0.0;
    std::map<std::string, ClassMetrics> per_class;
};

// Per-class precision/recall/F1 with the 0/0 -> 0 convention; macro values
// are the unweighted mean over {visual, non-visual}.
inline MetricReport classification_metrics(const std::vector<Label>& gold,
                                           const std::vector<Label>& pred) {
    if (gold.empty()) throw precondition_error("Empty", "no examples to score");
    if (gold.size() != pred.size()) {
        throw precondition_error("LengthMismatch", "gold and pred lengths differ");
    }
    MetricReport report;
    std::size_t correct = 0;
    for (Label cls : {Label::visual, Label::non_visual}) {
        std::size_t tp = 0, fp = 0, fn = 0, support = 0;
        for (std::size_t i = 0; i < gold.size(); ++i) {
            if (gold[i] == cls) ++support;
            if (pred[i] == cls && gold[i] == cls) ++tp;
            if (pred[i] == cls && gold[i] != cls) ++fp;
            if (pred[i] != cls && gold[i] == cls) ++fn;
        }
        ClassMetrics cm;
        cm.support = support;
        cm.precision = (tp + fp) == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
        cm.recall = (tp + fn) == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
        cm.f1 = (cm.precision + cm.recall) == 0.0
                    ? 0.0
                    : 2.0 * cm.precision * cm.recall / (cm.precision + cm.recall);
        report.per_class[to_string(cls)] = cm;
        report.macro_precision += cm.precision / 2.0;
        report.macro_recall += cm.recall / 2.0;
        report.macro_f1 += cm.f1 / 2.0;
    }
    for (std::size_t i = 0; i < gold.size(); ++i) {
        if (gold[i] == pred[i]) ++correct;
    }
    report.accuracy = static_cast<double>(correct) / static_cast<double>(gold.size());
    return report;
}

inline double mean_reciprocal_rank(const std::vector<std::size_t>& ranks) {
    if (ranks.empty()) throw precondition_error("Empty", "no ranks");
    double sum = 0.0;
    for (std::size_t r : ranks) {
        if (r < 1) throw precondition_error("InvalidRank", "ranks are 1-based");
        sum += 1.0 / static_cast<double>(r);
    }
    return sum / static_cast<double>(ranks.size());
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw precondition_error("LengthMismatch", "input lengths differ");
    if (x.size() < 3) throw precondition_error("TooFewPoints", "pearson needs at least 3 points");
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw precondition_error("ConstantInput", "pearson is undefined for constant input");
    }
    return sxy / std::sqrt(sxx * syy);
}

// Ordinal ratings of `units x raters`, missing cells allowed.
struct AnnotationMatrix {
    std::vector<std::vector<std::optional<int>>> ratings;
    int level_count = 7;
};

// Krippendorff's alpha with the ordinal difference metric
//   delta2(c, k) = (sum_{g=c..k} n_g - (n_c + n_k) / 2)^2
// over coincidence-matrix marginals n_g. Units with fewer than two ratings
// are ignored. Zero expected disagreement (every pairable value identical)
// is reported as perfect agreement, alpha = 1.
inline double krippendorff_alpha_ordinal(const AnnotationMatrix& m) {
    const auto levels = static_cast<std::size_t>(m.level_count);
    if (m.level_count < 2) throw precondition_error("InsufficientData", "need >= 2 levels");
    Matrix coincidence(levels + 1, levels + 1);  // 1-based values
    for (const auto& unit : m.ratings) {
        std::vector<int> present;
        for (const auto& r : unit) {
            if (!r) continue;
            if (*r < 1 || *r > m.level_count) {
                throw precondition_error("InvalidRating", "rating outside 1..level_count");
            }
            present.push_back(*r);
        }
        if (present.size() < 2) continue;
        const double weight = 1.0 / static_cast<double>(present.size() - 1);
        for (std::size_t i = 0; i < present.size(); ++i) {
            for (std::size_t j = 0; j < present.size(); ++j) {
                if (i != j) {
                    coincidence(static_cast<std::size_t>(present[i]),
                                static_cast<std::size_t>(present[j])) += weight;
                }
            }
        }
    }
    std::vector<double> marginal(levels + 1, 0.0);
    double total = 0.0;
    for (std::size_t c = 1; c <= levels; ++c) {
        for (std::size_t k = 1; k <= levels; ++k) marginal[c] += coincidence(c, k);
        total += marginal[c];
    }
    if (total < 2.0) {
        throw precondition_error("InsufficientData", "no unit has two or more ratings");
    }

    const auto ordinal_delta2 = [&](std::size_t c, std::size_t k) {
        if (c > k) std::swap(c, k);
        double cum = 0.0;
        for (std::size_t g = c; g <= k; ++g) cum += marginal[g];
        const double d = cum - (marginal[c] + marginal[k]) / 2.0;
        return d * d;
    };

    double observed = 0.0, expected = 0.0;
    for (std::size_t c = 1; c <= levels; ++c) {
        for (std::size_t k = 1; k <= levels; ++k) {
            const double d2 = ordinal_delta2(c, k);
            observed += coincidence(c, k) * d2;
            expected += marginal[c] * marginal[k] * d2;
        }
    }
    if (expected == 0.0) return 1.0;
    return 1.0 - (total - 1.0) * observed / expected;
}

// z_i = (x_i - mu) / sigma with the population sigma.
inline std::vector<double> z_standardize(const std::vector<double>& xs) {
    if (xs.size() < 2) throw precondition_error("TooFewPoints", "need at least 2 values");
    double mu = 0.0;
    for (double x : xs) mu += x;
    mu /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mu) * (x - mu);
    var /= static_cast<double>(xs.size());
    if (var == 0.0) throw precondition_error("ConstantInput", "sigma is zero");
    const double sigma = std::sqrt(var);
    std::vector<double> out;
    out.reserve(xs.size());
    for (double x : xs) out.push_back((x - mu) / sigma);
    return out;
}

// For each (text, image_id) pair, ranks every bank image by cosine
// similarity to the text and feeds the 1-based rank of the paired image
// into the mean reciprocal rank.
inline double retrieval_eval(const ModelCheckpoint& m,
                             const std::vector<std::pair<std::string, std::string>>& pairs,
                             const ImageBank& bank) {
    if (pairs.empty()) throw precondition_error("Empty", "no retrieval pairs");
    std::vector<std::pair<std::string, RawVector>> candidates(bank.begin(), bank.end());
    std::vector<std::size_t> ranks;
    ranks.reserve(pairs.size());
    for (const auto& [text, image_id] : pairs) {
        if (!bank.count(image_id)) {
            throw precondition_error("MissingImage", "image '" + image_id + "' not in bank");
        }
        const auto ranked = rank_images(m, text, candidates);
        for (std::size_t r = 0; r < ranked.size(); ++r) {
            if (ranked[r] == image_id) {
                ranks.push_back(r + 1);
                break;
            }
        }
    }
    return mean_reciprocal_rank(ranks);
}

}  // namespace vizscore
