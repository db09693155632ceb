#pragma once

// Two-stage fine-tuning: Adam over the contrastive objective, stage
// scheduling, validation threshold calibration, and a synthetic-corpus
// generator for desk-scale end-to-end runs.

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "vizscore/core.hpp"
#include "vizscore/evalsuite.hpp"
#include "vizscore/model.hpp"
#include "vizscore/objective.hpp"
#include "vizscore/types.hpp"

namespace vizscore {

enum class ObjectiveKind { null_anchored, classification_only };

inline const char* to_string(ObjectiveKind k) {
    return k == ObjectiveKind::null_anchored ? "null_anchored" : "classification_only";
}

inline ObjectiveKind objective_from_string(const std::string& s) {
    if (s == "null_anchored") return ObjectiveKind::null_anchored;
    if (s == "classification_only") return ObjectiveKind::classification_only;
    throw parse_error("BadObjective", "unknown objective '" + s + "'");
}

struct TrainConfig {
    int stage1_epochs = 5;
    int stage2_epochs = 2;
    double learning_rate = 5e-5;  // reference default; toy-scale runs raise it
    int batch_size = 32;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    ObjectiveKind objective = ObjectiveKind::null_anchored;
    ObjectiveOptions objective_options{};

    void check() const {
        if (stage1_epochs < 0 || stage2_epochs < 0) {
            throw precondition_error("BadConfig", "epoch counts must be >= 0");
        }
        if (!(learning_rate > 0.0)) throw precondition_error("BadConfig", "learning_rate must be > 0");
        if (batch_size < 1) throw precondition_error("BadConfig", "batch_size must be >= 1");
    }
};

struct EpochStat {
    int stage = 1;
    int epoch = 1;  // 1-based within the stage
    double mean_loss = 0.0;
};

struct TrainResult {
    ModelCheckpoint model;
    std::vector<EpochStat> log;
};

// Adam with bias correction. Moments share the parameter shape; step counts
// from zero for a fresh state.
struct AdamState {
    ParamSet m;
    ParamSet v;
    long step = 0;

    static AdamState zeros_like(const ModelConfig& cfg) {
        return {ParamSet::zeros_like(cfg), ParamSet::zeros_like(cfg), 0};
    }
};

inline void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state,
                      const TrainConfig& cfg) {
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, t);
    auto p = param_coords(params);
    ParamSet grads_copy = grads;  // coordinate views need mutable access
    auto g = param_coords(grads_copy);
    auto mm = param_coords(state.m);
    auto vv = param_coords(state.v);
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double gi = *g[i];
        *mm[i] = cfg.adam_beta1 * *mm[i] + (1.0 - cfg.adam_beta1) * gi;
        *vv[i] = cfg.adam_beta2 * *vv[i] + (1.0 - cfg.adam_beta2) * gi * gi;
        const double m_hat = *mm[i] / bc1;
        const double v_hat = *vv[i] / bc2;
        *p[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
    }
    // Keep 1/tau inside [1, 100] (projection after the step).
    params.log_inv_tau =
        std::clamp(params.log_inv_tau, std::log(kMinInvTau), std::log(kMaxInvTau));
}

namespace detail {

inline void check_corpus(const std::vector<LabeledExample>& corpus, const ImageBank& bank) {
    std::size_t visual = 0, non_visual = 0;
    for (const auto& ex : corpus) {
        if (!ex.consistent()) {
            throw precondition_error("BadExample",
                                     "example '" + ex.text + "' has inconsistent label/image");
        }
        if (ex.label == Label::visual) {
            ++visual;
            if (!bank.count(*ex.image_id)) {
                throw precondition_error("UnresolvedImage",
                                         "image '" + *ex.image_id + "' not found in image bank");
            }
        } else {
            ++non_visual;
        }
    }
    if (visual == 0 || non_visual == 0) {
        throw precondition_error("DegenerateCorpus",
                                 "training corpus needs both visual and non-visual examples");
    }
}

inline Batch make_batch(const std::vector<LabeledExample>& corpus,
                        const std::vector<std::size_t>& order, std::size_t begin, std::size_t end,
                        const ImageBank& bank) {
    Batch batch;
    for (std::size_t i = begin; i < end; ++i) {
        const auto& ex = corpus[order[i]];
        batch.texts.push_back(ex.text);
        batch.labels.push_back(ex.label);
        if (ex.label == Label::visual) {
            batch.image_features.emplace_back(bank.at(*ex.image_id));
        } else {
            batch.image_features.emplace_back(std::nullopt);
        }
    }
    return batch;
}

inline void check_params_finite(const ParamSet& params) {
    ParamSet copy = params;
    bool ok = true;
    for_each_coord(copy, [&](double& x) { ok = ok && std::isfinite(x); });
    if (!ok) throw numeric_error("AbortNaN", "training produced non-finite parameters");
}

}  // namespace detail

// One training stage: per-epoch Fisher-Yates shuffle (one PRNG stream across
// epochs, seeded by cfg.seed), fixed batch order, last partial batch kept.
// The per-epoch mean loss is the example-weighted mean over batches.
inline TrainResult train_stage(const ModelCheckpoint& m0,
                               const std::vector<LabeledExample>& corpus, const ImageBank& bank,
                               const TrainConfig& cfg, int epochs, int stage) {
    cfg.check();
    detail::check_corpus(corpus, bank);
    TrainResult result{m0, {}};
    if (epochs == 0) return result;

    const RawVector common = default_common_visual_features(m0.config);
    AdamState adam = AdamState::zeros_like(m0.config);
    Rng rng(cfg.seed);
    std::vector<std::size_t> order(corpus.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t begin = 0; begin < corpus.size();
             begin += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end =
                std::min(corpus.size(), begin + static_cast<std::size_t>(cfg.batch_size));
            const Batch batch = detail::make_batch(corpus, order, begin, end, bank);
            GradientReport report =
                cfg.objective == ObjectiveKind::null_anchored
                    ? contrastive_grad(result.model, batch, cfg.objective_options)
                    : classification_only_grad(result.model, batch, common,
                                               cfg.objective_options);
            adam_step(result.model.params, report.grads, adam, cfg);
            detail::check_params_finite(result.model.params);
            loss_sum += report.loss * static_cast<double>(end - begin);
        }
        result.log.push_back({stage, epoch, loss_sum / static_cast<double>(corpus.size())});
    }
    return result;
}

inline TrainResult train(const ModelCheckpoint& m0, const std::vector<LabeledExample>& corpus,
                         const ImageBank& bank, const TrainConfig& cfg) {
    return train_stage(m0, corpus, bank, cfg, cfg.stage1_epochs, 1);
}

// Stage 1 on the auto-labeled corpus, stage 2 on the human-labeled corpus.
// Adam moments reset at the stage boundary.
inline TrainResult two_stage_train(const ModelCheckpoint& m0,
                                   const std::vector<LabeledExample>& auto_corpus,
                                   const std::vector<LabeledExample>& human_corpus,
                                   const ImageBank& bank, const TrainConfig& cfg) {
    TrainResult stage1 = train_stage(m0, auto_corpus, bank, cfg, cfg.stage1_epochs, 1);
    TrainResult stage2 = train_stage(stage1.model, human_corpus, bank, cfg, cfg.stage2_epochs, 2);
    TrainResult combined{std::move(stage2.model), std::move(stage1.log)};
    combined.log.insert(combined.log.end(), stage2.log.begin(), stage2.log.end());
    return combined;
}

// Sweeps thresholds at midpoints between adjacent distinct sorted scores,
// plus -inf/+inf sentinels, classifying score >= threshold as visual.
// Returns the threshold with the best macro-F1; ties go to the smallest.
inline double calibrate_threshold(const std::vector<double>& scores,
                                  const std::vector<Label>& gold) {
    if (scores.size() != gold.size()) {
        throw precondition_error("LengthMismatch", "scores and gold lengths differ");
    }
    if (scores.size() < 2) throw precondition_error("TooFewPoints", "need at least 2 examples");
    bool has_visual = false, has_non_visual = false;
    for (Label l : gold) (l == Label::visual ? has_visual : has_non_visual) = true;
    if (!has_visual || !has_non_visual) {
        throw precondition_error("SingleClass", "gold labels contain a single class");
    }

    std::vector<double> distinct = scores;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    std::vector<double> candidates;
    candidates.push_back(-std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
        candidates.push_back((distinct[i] + distinct[i + 1]) / 2.0);
    }
    candidates.push_back(std::numeric_limits<double>::infinity());

    double best_threshold = candidates.front();
    double best_f1 = -1.0;
    std::vector<Label> pred(scores.size());
    for (double t : candidates) {
        for (std::size_t i = 0; i < scores.size(); ++i) {
            pred[i] = scores[i] >= t ? Label::visual : Label::non_visual;
        }
        const double f1 = classification_metrics(gold, pred).macro_f1;
        if (f1 > best_f1) {
            best_f1 = f1;
            best_threshold = t;
        }
    }
    return best_threshold;
}

struct SyntheticSpec {
    int n_topics = 4;
    int n_visual = 400;
    int n_nonvisual = 400;
    std::pair<int, int> sentence_len_range{4, 9};
    double noise_sigma = 0.1;
    std::uint64_t seed = 7;
    int feature_dim = 64;

    void check() const {
        if (n_topics <= 0 || n_visual <= 0 || n_nonvisual <= 0 || feature_dim <= 0) {
            throw precondition_error("InvalidSpec", "counts and feature_dim must be positive");
        }
        if (sentence_len_range.first < 1 || sentence_len_range.second < sentence_len_range.first) {
            throw precondition_error("InvalidSpec", "bad sentence length range");
        }
        if (noise_sigma < 0.0) throw precondition_error("InvalidSpec", "noise_sigma must be >= 0");
    }
};

struct SyntheticData {
    std::vector<LabeledExample> train;
    std::vector<LabeledExample> held_out;
    ImageBank images;  // per-example images plus one "topicN" prototype per topic
    // Held-out visual sentences paired with their topic prototype id; feeds
    // topic-level retrieval evaluation.
    std::vector<std::pair<std::string, std::string>> retrieval_pairs;
};

namespace detail {

inline const std::vector<std::string>& function_words() {
    static const std::vector<std::string> words = {
        "the",   "and",  "of",    "to",    "a",     "in",   "that",  "it",    "is",    "was",
        "for",   "on",   "are",   "as",    "with",  "his",  "they",  "at",    "be",    "this",
        "have",  "from", "or",    "had",   "by",    "but",  "not",   "what",  "all",   "were",
        "when",  "your", "can",   "said",  "there", "use",  "an",    "each",  "which", "she"};
    return words;
}

inline std::string topic_word(int topic, std::size_t i) {
    return "t" + std::to_string(topic) + "w" + std::to_string(i);
}

}  // namespace detail

inline constexpr std::size_t kTopicVocabSize = 12;

// Each topic gets a seeded prototype feature vector and a 12-word visual
// vocabulary disjoint from the fixed function-word list. Visual examples
// sample tokens from one topic and pair with prototype + gaussian noise;
// non-visual examples sample function words and carry the NULL marker.
// Draw order: prototypes, visual examples, non-visual examples, split
// shuffle. The split holds out 20% of the examples.
inline SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    spec.check();
    Rng rng(spec.seed);
    const auto dim = static_cast<std::size_t>(spec.feature_dim);

    std::vector<RawVector> prototypes(static_cast<std::size_t>(spec.n_topics));
    for (auto& p : prototypes) {
        p.resize(dim);
        for (double& x : p) x = rng.uniform_pm1();
    }

    struct Drawn {
        LabeledExample example;
        int topic = -1;
    };
    std::vector<Drawn> drawn;
    drawn.reserve(static_cast<std::size_t>(spec.n_visual + spec.n_nonvisual));

    SyntheticData data;
    const auto draw_len = [&] {
        const int span = spec.sentence_len_range.second - spec.sentence_len_range.first + 1;
        return spec.sentence_len_range.first +
               static_cast<int>(rng.uniform_index(static_cast<std::size_t>(span)));
    };

    for (int i = 0; i < spec.n_visual; ++i) {
        const int topic = static_cast<int>(rng.uniform_index(prototypes.size()));
        const int len = draw_len();
        std::string text;
        for (int t = 0; t < len; ++t) {
            if (t) text += ' ';
            text += detail::topic_word(topic, rng.uniform_index(kTopicVocabSize));
        }
        RawVector features = prototypes[static_cast<std::size_t>(topic)];
        for (double& x : features) x += spec.noise_sigma * rng.gaussian();
        const std::string image_id = "img" + std::to_string(i);
        data.images.emplace(image_id, std::move(features));
        drawn.push_back({{std::move(text), Label::visual, image_id}, topic});
    }
    const auto& func_words = detail::function_words();
    for (int i = 0; i < spec.n_nonvisual; ++i) {
        const int len = draw_len();
        std::string text;
        for (int t = 0; t < len; ++t) {
            if (t) text += ' ';
            text += func_words[rng.uniform_index(func_words.size())];
        }
        drawn.push_back({{std::move(text), Label::non_visual, std::nullopt}, -1});
    }
    for (std::size_t t = 0; t < prototypes.size(); ++t) {
        data.images.emplace("topic" + std::to_string(t), prototypes[t]);
    }

    std::vector<std::size_t> order(drawn.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    const std::size_t n_held = drawn.size() / 5;
    const std::size_t n_train = drawn.size() - n_held;
    for (std::size_t i = 0; i < order.size(); ++i) {
        const Drawn& d = drawn[order[i]];
        if (i < n_train) {
            data.train.push_back(d.example);
        } else {
            data.held_out.push_back(d.example);
            if (d.topic >= 0) {
                data.retrieval_pairs.emplace_back(d.example.text,
                                                  "topic" + std::to_string(d.topic));
            }
        }
    }
    return data;
}

// Sorted unique tokens across the given corpora; the usual way to build a
// vocabulary for a fresh model.
inline std::vector<std::string> build_vocab(
    const std::vector<const std::vector<LabeledExample>*>& corpora) {
    std::set<std::string> tokens;
    for (const auto* corpus : corpora) {
        for (const auto& ex : *corpus) {
            for (auto& tok : tokenize(ex.text)) tokens.insert(std::move(tok));
        }
    }
    return {tokens.begin(), tokens.end()};
}

}  // namespace vizscore
