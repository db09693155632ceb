#include "vizscore/objective.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "support/finite_diff.hpp"

using namespace vizscore;

namespace {

ModelConfig small_config(int d_out = 5) {
    ModelConfig cfg;
    cfg.vocab = {"ant", "bee", "cow", "dog", "elk", "fox", "gnu", "hen"};
    cfg.d_tok = 6;
    cfg.d_hidden = 7;
    cfg.d_out = d_out;
    cfg.d_img = 9;
    cfg.null_seed = 20;
    return cfg;
}

Batch random_batch(Rng& rng, const ModelConfig& cfg, std::size_t n) {
    Batch batch;
    for (std::size_t i = 0; i < n; ++i) {
        const bool visual = rng.uniform01() < 0.5 || (i == 0);   // at least one visual
        const bool force_nonvisual = (i == 1 && n > 1);          // and one non-visual
        std::string text;
        const std::size_t len = 1 + rng.uniform_index(5);
        for (std::size_t t = 0; t < len; ++t) {
            if (t) text += ' ';
            text += cfg.vocab[rng.uniform_index(cfg.vocab.size())];
        }
        if (visual && !force_nonvisual) {
            RawVector f(static_cast<std::size_t>(cfg.d_img));
            for (auto& x : f) x = rng.uniform_pm1();
            batch.texts.push_back(text);
            batch.labels.push_back(Label::visual);
            batch.image_features.emplace_back(std::move(f));
        } else {
            batch.texts.push_back(text);
            batch.labels.push_back(Label::non_visual);
            batch.image_features.emplace_back(std::nullopt);
        }
    }
    return batch;
}

// Checkpoint with an extra scramble so tau is off its init value.
ModelCheckpoint random_checkpoint(Rng& rng, const ModelConfig& cfg) {
    auto m = init_checkpoint(cfg, rng.next_u64());
    m.params.log_inv_tau = rng.uniform01() * std::log(50.0) + 0.1;
    for (double& b : m.params.b1) b = 0.1 * rng.uniform_pm1();
    for (double& b : m.params.b2) b = 0.1 * rng.uniform_pm1();
    for (double& b : m.params.b_img) b = 0.1 * rng.uniform_pm1();
    return m;
}

// Checkpoint rigged so that "a" embeds to e1, "b" to e2, image features map
// through an identity projector, and tau = 1. Two rows (a, e1), (b, e2) then
// produce the identity similarity matrix.
ModelCheckpoint rigged_identity_checkpoint() {
    ModelConfig cfg;
    cfg.vocab = {"a", "b"};
    cfg.d_tok = 2;
    cfg.d_hidden = 2;
    cfg.d_out = 2;
    cfg.d_img = 2;
    ModelCheckpoint m;
    m.config = cfg;
    m.params = ParamSet::zeros_like(cfg);
    m.params.token_embeddings(0, 0) = 1.0;  // a -> e1
    m.params.token_embeddings(1, 1) = 1.0;  // b -> e2
    m.params.w1(0, 0) = m.params.w1(1, 1) = 1.0;
    m.params.w2(0, 0) = m.params.w2(1, 1) = 1.0;
    m.params.w_img(0, 0) = m.params.w_img(1, 1) = 1.0;
    m.params.log_inv_tau = 0.0;         // tau = 1
    m.null_features = {0.0, 1.0};       // NULL embeds to e2
    rebuild_token_index(m);
    return m;
}

}  // namespace

TEST_CASE("contrastive loss closed forms", "[objective]") {
    SECTION("identity similarity matrix at N = 2 gives ln(1 + e^-1)") {
        const auto m = rigged_identity_checkpoint();
        Batch batch;
        batch.texts = {"a", "b"};
        batch.labels = {Label::visual, Label::visual};
        batch.image_features = {RawVector{1.0, 0.0}, RawVector{0.0, 1.0}};
        const auto report = contrastive_loss(m, batch);
        CHECK(report.logits(0, 0) == Catch::Approx(1.0).margin(1e-12));
        CHECK(report.logits(0, 1) == Catch::Approx(0.0).margin(1e-12));
        CHECK(report.loss ==
              Catch::Approx(std::log(1.0 + std::exp(-1.0))).margin(1e-9));
    }
    SECTION("classification-only identity closed form") {
        const auto m = rigged_identity_checkpoint();
        Batch batch;
        batch.texts = {"a", "b"};
        batch.labels = {Label::visual, Label::non_visual};
        batch.image_features = {RawVector{1.0, 0.0}, std::nullopt};
        const RawVector common{1.0, 0.0};  // orthogonal to the NULL features
        const auto report = classification_only_loss(m, batch, common);
        CHECK(report.loss ==
              Catch::Approx(std::log(1.0 + std::exp(-1.0))).margin(1e-9));
    }
    SECTION("N = 1 visual pair gives zero loss") {
        Rng rng(1);
        const auto cfg = small_config();
        const auto m = random_checkpoint(rng, cfg);
        Batch batch;
        batch.texts = {"ant bee"};
        batch.labels = {Label::visual};
        batch.image_features = {seeded_random_vector(3, 9)};
        const auto report = contrastive_loss(m, batch);
        CHECK(report.loss == 0.0);
    }
    SECTION("duplicate rows make all logits equal, loss = ln N") {
        Rng rng(2);
        const auto cfg = small_config();
        const auto m = random_checkpoint(rng, cfg);
        const RawVector f = seeded_random_vector(4, 9);
        Batch batch;
        for (int i = 0; i < 2; ++i) {
            batch.texts.emplace_back("cow dog");
            batch.labels.push_back(Label::visual);
            batch.image_features.emplace_back(f);
        }
        const auto report = contrastive_loss(m, batch);
        CHECK(report.loss == Catch::Approx(std::log(2.0)).margin(1e-9));

        Batch batch4 = batch;
        for (int i = 0; i < 2; ++i) {
            batch4.texts.emplace_back("cow dog");
            batch4.labels.push_back(Label::visual);
            batch4.image_features.emplace_back(f);
        }
        CHECK(contrastive_loss(m, batch4).loss == Catch::Approx(std::log(4.0)).margin(1e-9));
    }
    SECTION("batch permutation leaves the loss unchanged") {
        Rng rng(3);
        const auto cfg = small_config();
        const auto m = random_checkpoint(rng, cfg);
        auto batch = random_batch(rng, cfg, 6);
        const double base = contrastive_loss(m, batch).loss;
        Batch perm;
        const std::vector<std::size_t> order{4, 2, 0, 5, 1, 3};
        for (std::size_t i : order) {
            perm.texts.push_back(batch.texts[i]);
            perm.labels.push_back(batch.labels[i]);
            perm.image_features.push_back(batch.image_features[i]);
        }
        CHECK(contrastive_loss(m, perm).loss == Catch::Approx(base).margin(1e-9));
    }
    SECTION("loss is non-negative over random batches") {
        Rng rng(4);
        const auto cfg = small_config();
        for (int trial = 0; trial < 25; ++trial) {
            const auto m = random_checkpoint(rng, cfg);
            const auto batch = random_batch(rng, cfg, 1 + rng.uniform_index(6));
            CHECK(contrastive_loss(m, batch).loss >= 0.0);
        }
    }
    SECTION("logit matrix stores inner products over tau") {
        Rng rng(5);
        const auto cfg = small_config();
        const auto m = random_checkpoint(rng, cfg);
        const auto batch = random_batch(rng, cfg, 3);
        const auto report = contrastive_loss(m, batch);
        const double inv_tau = m.inv_tau();
        for (std::size_t k = 0; k < 3; ++k) {
            const auto t = encode_text(m, batch.texts[k]);
            for (std::size_t j = 0; j < 3; ++j) {
                const auto i_emb = batch.labels[j] == Label::visual
                                       ? encode_image(m, *batch.image_features[j])
                                       : null_embedding(m);
                CHECK(report.logits(j, k) ==
                      Catch::Approx(inv_tau * inner(i_emb, t)).margin(1e-12));
            }
        }
    }
    SECTION("all-visual distinct batch matches the plain symmetric loss") {
        // no NULL substitution active: recompute from the logits directly
        Rng rng(6);
        const auto cfg = small_config();
        const auto m = random_checkpoint(rng, cfg);
        Batch batch;
        for (int i = 0; i < 4; ++i) {
            batch.texts.push_back(cfg.vocab[static_cast<std::size_t>(i)]);
            batch.labels.push_back(Label::visual);
            batch.image_features.emplace_back(seeded_random_vector(static_cast<std::uint64_t>(40 + i), 9));
        }
        const auto report = contrastive_loss(m, batch);
        double expected = 0.0;
        for (std::size_t j = 0; j < 4; ++j) {
            double row = 0.0, col = 0.0;
            for (std::size_t k = 0; k < 4; ++k) {
                row += std::exp(report.logits(j, k) - report.logits(j, j));
                col += std::exp(report.logits(k, j) - report.logits(j, j));
            }
            expected += std::log(row) + std::log(col);
        }
        expected /= 8.0;
        CHECK(report.loss == Catch::Approx(expected).margin(1e-9));
    }
}

TEST_CASE("batch validation", "[objective]") {
    Rng rng(7);
    const auto cfg = small_config();
    const auto m = random_checkpoint(rng, cfg);
    SECTION("empty batch") {
        CHECK_THROWS_MATCHES(contrastive_loss(m, {}), Error,
                             Catch::Matchers::Predicate<Error>(
                                 [](const Error& e) { return e.name() == "EmptyBatch"; }));
    }
    SECTION("visual row without features") {
        Batch b;
        b.texts = {"ant"};
        b.labels = {Label::visual};
        b.image_features = {std::nullopt};
        CHECK_THROWS_AS(contrastive_loss(m, b), Error);
    }
    SECTION("non-visual row with features") {
        Batch b;
        b.texts = {"ant"};
        b.labels = {Label::non_visual};
        b.image_features = {seeded_random_vector(1, 9)};
        CHECK_THROWS_AS(contrastive_loss(m, b), Error);
    }
}

TEST_CASE("analytic gradient matches finite differences", "[objective]") {
    Rng rng(8);
    for (int trial = 0; trial < 8; ++trial) {
        const auto cfg = small_config(4 + static_cast<int>(rng.uniform_index(3)));
        const auto m = random_checkpoint(rng, cfg);
        const std::size_t n = std::vector<std::size_t>{2, 4, 8}[rng.uniform_index(3)];
        const auto batch = random_batch(rng, cfg, n);

        const auto analytic = contrastive_grad(m, batch);
        const auto numeric = testsupport::finite_difference_grad(
            m, [&](const ModelCheckpoint& mm) { return contrastive_loss(mm, batch).loss; });
        const auto cmp = testsupport::compare_grads(analytic.grads, numeric);
        INFO("trial " << trial << " worst rel err " << cmp.worst_rel);
        CHECK(cmp.mismatches == 0);
    }
}

TEST_CASE("gradient structure follows the data paths", "[objective]") {
    Rng rng(9);
    const auto cfg = small_config();
    const auto m = random_checkpoint(rng, cfg);

    SECTION("token absent from the batch gets a zero embedding gradient") {
        Batch batch;
        batch.texts = {"ant bee", "cow"};
        batch.labels = {Label::visual, Label::non_visual};
        batch.image_features = {seeded_random_vector(11, 9), std::nullopt};
        const auto grads = contrastive_grad(m, batch).grads;
        // "hen" is vocab row 7 and never appears
        for (std::size_t j = 0; j < grads.token_embeddings.cols(); ++j) {
            CHECK(grads.token_embeddings(7, j) == 0.0);
        }
        bool any_nonzero = false;
        for (std::size_t j = 0; j < grads.token_embeddings.cols(); ++j) {
            if (grads.token_embeddings(0, j) != 0.0) any_nonzero = true;  // "ant"
        }
        CHECK(any_nonzero);
    }
    SECTION("duplicating the batch shifts loss by exactly ln 2, gradients unchanged") {
        // Every softmax denominator doubles when each row appears twice, a
        // theta-independent offset: loss_2N = loss_N + ln 2 identically, so
        // the per-parameter gradient is untouched.
        const auto batch = random_batch(rng, cfg, 3);
        Batch doubled = batch;
        for (std::size_t i = 0; i < batch.size(); ++i) {
            doubled.texts.push_back(batch.texts[i]);
            doubled.labels.push_back(batch.labels[i]);
            doubled.image_features.push_back(batch.image_features[i]);
        }
        auto g1 = contrastive_grad(m, batch);
        auto g2 = contrastive_grad(m, doubled);
        CHECK(g2.loss == Catch::Approx(g1.loss + std::log(2.0)).margin(1e-9));
        auto c1 = param_coords(g1.grads);
        auto c2 = param_coords(g2.grads);
        for (std::size_t i = 0; i < c1.size(); ++i) {
            CHECK(*c2[i] == Catch::Approx(*c1[i]).margin(1e-9));
        }
    }
    SECTION("NULL branch feeds the image projector gradient") {
        Batch batch;
        batch.texts = {"ant", "bee"};
        batch.labels = {Label::non_visual, Label::non_visual};
        batch.image_features = {std::nullopt, std::nullopt};
        const auto grads = contrastive_grad(m, batch).grads;
        double norm = 0.0;
        for (double x : grads.w_img.data()) norm += x * x;
        CHECK(norm > 0.0);
    }
    SECTION("N = 1 gradient matches finite differences near the zero-loss point") {
        Batch batch;
        batch.texts = {"dog elk"};
        batch.labels = {Label::visual};
        batch.image_features = {seeded_random_vector(12, 9)};
        const auto analytic = contrastive_grad(m, batch);
        CHECK(analytic.loss == 0.0);
        const auto numeric = testsupport::finite_difference_grad(
            m, [&](const ModelCheckpoint& mm) { return contrastive_loss(mm, batch).loss; });
        CHECK(testsupport::compare_grads(analytic.grads, numeric).mismatches == 0);
    }
}

TEST_CASE("classification-only objective", "[objective]") {
    Rng rng(10);
    const auto cfg = small_config();
    const auto m = random_checkpoint(rng, cfg);
    const RawVector common = default_common_visual_features(cfg);

    SECTION("N = 1 gives zero loss") {
        Batch batch;
        batch.texts = {"fox"};
        batch.labels = {Label::visual};
        batch.image_features = {seeded_random_vector(13, 9)};
        CHECK(classification_only_loss(m, batch, common).loss == 0.0);
    }
    SECTION("all-visual batch floors near ln N") {
        Batch batch;
        for (int i = 0; i < 4; ++i) {
            batch.texts.push_back(cfg.vocab[static_cast<std::size_t>(i)]);
            batch.labels.push_back(Label::visual);
            batch.image_features.emplace_back(
                seeded_random_vector(static_cast<std::uint64_t>(50 + i), 9));
        }
        // every image row collapses to the common anchor: the image->text
        // direction cannot beat a uniform softmax on its half of the loss
        const auto report = classification_only_loss(m, batch, common);
        CHECK(report.loss >= 0.5 * std::log(4.0) - 1e-9);
    }
    SECTION("visual rows ignore their own features") {
        auto batch = random_batch(rng, cfg, 4);
        auto scrambled = batch;
        for (std::size_t i = 0; i < scrambled.size(); ++i) {
            if (scrambled.labels[i] == Label::visual) {
                scrambled.image_features[i] = seeded_random_vector(999 + i, 9);
            }
        }
        CHECK(classification_only_loss(m, batch, common).loss ==
              classification_only_loss(m, scrambled, common).loss);
    }
    SECTION("gradient matches finite differences") {
        const auto batch = random_batch(rng, cfg, 4);
        const auto analytic = classification_only_grad(m, batch, common);
        const auto numeric = testsupport::finite_difference_grad(m, [&](const ModelCheckpoint& mm) {
            return classification_only_loss(mm, batch, common).loss;
        });
        CHECK(testsupport::compare_grads(analytic.grads, numeric).mismatches == 0);
    }
}

TEST_CASE("duplicate-NULL masking flag", "[objective]") {
    Rng rng(11);
    const auto cfg = small_config();
    const auto m = random_checkpoint(rng, cfg);
    Batch batch;
    batch.texts = {"ant", "bee", "cow dog"};
    batch.labels = {Label::non_visual, Label::non_visual, Label::visual};
    batch.image_features = {std::nullopt, std::nullopt, seeded_random_vector(17, 9)};

    ObjectiveOptions masked;
    masked.mask_duplicate_nulls = true;
    const double plain = contrastive_loss(m, batch).loss;
    const double with_mask = contrastive_loss(m, batch, masked).loss;
    // dropping identical NULL competitors can only shrink the denominators
    CHECK(with_mask <= plain + 1e-12);

    SECTION("masked gradient still matches finite differences") {
        const auto analytic = contrastive_grad(m, batch, masked);
        const auto numeric = testsupport::finite_difference_grad(m, [&](const ModelCheckpoint& mm) {
            return contrastive_loss(mm, batch, masked).loss;
        });
        CHECK(testsupport::compare_grads(analytic.grads, numeric).mismatches == 0);
    }
    SECTION("no effect on batches with at most one NULL row") {
        Batch single;
        single.texts = {"ant", "bee"};
        single.labels = {Label::non_visual, Label::visual};
        single.image_features = {std::nullopt, seeded_random_vector(18, 9)};
        CHECK(contrastive_loss(m, single, masked).loss ==
              contrastive_loss(m, single).loss);
    }
}
