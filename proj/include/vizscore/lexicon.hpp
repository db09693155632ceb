#pragma once

// Imageability lexicons and the word/heuristic-level baselines: min-max
// normalization of raw ratings, embedding-based score propagation,
// sentence-level aggregation, object-mention concentration, and the random
// prior baseline.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "vizscore/core.hpp"
#include "vizscore/tokenize.hpp"
#include "vizscore/types.hpp"

namespace vizscore {

// word (lowercased) -> imageability score in [0, 1]. Ordered map keeps
// iteration and serialization deterministic.
struct ImageabilityLexicon {
    std::map<std::string, double> entries;
};

struct EmbeddingTable {
    std::size_t dim = 0;
    std::map<std::string, RawVector> entries;
};

struct ObjectVocabulary {
    std::set<std::string> objects;
};

// Min-max normalization over the observed scores. A degenerate range (all
// scores equal) maps everything to 0.5.
inline ImageabilityLexicon normalize_lexicon(const std::map<std::string, double>& raw) {
    if (raw.empty()) {
        throw precondition_error("EmptyLexicon", "cannot normalize an empty lexicon");
    }
    double lo = raw.begin()->second, hi = raw.begin()->second;
    for (const auto& [word, score] : raw) {
        if (!std::isfinite(score)) {
            throw precondition_error("NonFinite", "lexicon score for '" + word + "' is not finite");
        }
        lo = std::min(lo, score);
        hi = std::max(hi, score);
    }
    ImageabilityLexicon lex;
    for (const auto& [word, score] : raw) {
        lex.entries[word] = (hi == lo) ? 0.5 : (score - lo) / (hi - lo);
    }
    return lex;
}

// Expands the lexicon over the embedding table's vocabulary. Each table word
// w absent from the lexicon gets clamp(sim_max, 0, 1) * score(w_best), where
// w_best is the in-lexicon word with the highest cosine similarity to w
// (ties broken by lexicographic order of the candidate word). In-lexicon
// words are passed through unchanged.
inline ImageabilityLexicon propagate(const ImageabilityLexicon& lex, const EmbeddingTable& table) {
    std::vector<const std::pair<const std::string, double>*> anchors;
    std::vector<const RawVector*> anchor_vecs;
    for (const auto& entry : lex.entries) {
        auto it = table.entries.find(entry.first);
        if (it != table.entries.end()) {
            anchors.push_back(&entry);
            anchor_vecs.push_back(&it->second);
        }
    }
    if (anchors.empty()) {
        throw precondition_error("NoOverlap", "no lexicon word has an embedding in the table");
    }

    ImageabilityLexicon out = lex;
    for (const auto& [word, vec] : table.entries) {
        if (lex.entries.count(word)) continue;
        double best_sim = 0.0;
        std::size_t best = static_cast<std::size_t>(-1);
        for (std::size_t i = 0; i < anchors.size(); ++i) {
            const double sim = cosine_guarded(vec, *anchor_vecs[i]);
            // Anchors iterate in lexicographic order, so strict > keeps the
            // lexicographically smallest word among ties.
            if (best == static_cast<std::size_t>(-1) || sim > best_sim) {
                best_sim = sim;
                best = i;
            }
        }
        const double sim_clamped = std::clamp(best_sim, 0.0, 1.0);
        out.entries[word] = sim_clamped * anchors[best]->second;
    }
    return out;
}

inline std::set<std::string> unique_tokens(const std::string& text) {
    std::set<std::string> uniq;
    for (auto& tok : tokenize(text)) uniq.insert(std::move(tok));
    return uniq;
}

// Average imageability score over the unique tokens; out-of-vocabulary
// tokens score 0.
inline double sentence_score_lexicon(const std::string& text, const ImageabilityLexicon& lex) {
    const auto uniq = unique_tokens(text);
    if (uniq.empty()) {
        throw precondition_error("EmptyText", "no tokens after tokenization");
    }
    double sum = 0.0;
    for (const auto& tok : uniq) {
        auto it = lex.entries.find(tok);
        if (it != lex.entries.end()) sum += it->second;
    }
    return sum / static_cast<double>(uniq.size());
}

// Fraction of unique tokens that name a known object (unigram matching).
inline double sentence_score_vg(const std::string& text, const ObjectVocabulary& vocab) {
    const auto uniq = unique_tokens(text);
    if (uniq.empty()) {
        throw precondition_error("EmptyText", "no tokens after tokenization");
    }
    std::size_t hits = 0;
    for (const auto& tok : uniq) {
        if (vocab.objects.count(tok)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(uniq.size());
}

// n labels sampled i.i.d. with the empirical class frequencies of the
// training labels. A draw u < p(visual) yields visual.
inline std::vector<Label> random_baseline(const std::vector<Label>& labels_train, std::size_t n,
                                          std::uint64_t seed) {
    if (labels_train.empty()) {
        throw precondition_error("EmptyTraining", "random baseline needs a non-empty training set");
    }
    std::size_t visual = 0;
    for (Label l : labels_train) {
        if (l == Label::visual) ++visual;
    }
    const double p_visual = static_cast<double>(visual) / static_cast<double>(labels_train.size());
    Rng rng(seed);
    std::vector<Label> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(rng.uniform01() < p_visual ? Label::visual : Label::non_visual);
    }
    return out;
}

}  // namespace vizscore
