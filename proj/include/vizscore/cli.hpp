#pragma once

// Command-line surface wiring ingestion -> labeling -> training -> scoring ->
// evaluation, plus embedding export. Every command writes its output
// atomically and drops a run manifest next to it. Exit codes: 0 success,
// 2 input/parse, 3 domain precondition, 4 numeric failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vizscore/io.hpp"
#include "vizscore/labeler.hpp"
#include "vizscore/lexicon.hpp"
#include "vizscore/model.hpp"
#include "vizscore/trainer.hpp"

namespace vizscore::cli {

namespace fs = std::filesystem;

// Resource files (lexicons, embedding tables, object vocabularies) fall back
// to $VIZSCORE_DATA_DIR when the given path does not exist.
inline fs::path resolve_resource(const std::string& path) {
    if (fs::exists(path)) return path;
    if (const char* dir = std::getenv("VIZSCORE_DATA_DIR")) {
        const fs::path alt = fs::path(dir) / path;
        if (fs::exists(alt)) return alt;
    }
    return path;
}

namespace detail {

struct GlobalOptions {
    std::uint64_t seed = 0;
    std::string config_path;
};

inline io::RunManifest manifest(const std::string& command, const GlobalOptions& global,
                                std::vector<std::string> inputs, const std::string& output) {
    io::RunManifest m;
    m.command = command;
    if (!global.config_path.empty()) m.config_path = global.config_path;
    m.input_paths = std::move(inputs);
    m.output_path = output;
    m.seed = global.seed;
    return m;
}

inline void cmd_label(const GlobalOptions& global, const std::string& pages_path,
                      const std::string& out_path, double t_pos, double t_neg, double top_frac,
                      double bottom_frac, bool percentile_mode, const std::string& ckpt_path) {
    std::optional<ModelCheckpoint> ckpt;
    if (!ckpt_path.empty()) ckpt = io::load_checkpoint(ckpt_path);
    const auto pages = io::load_pages(pages_path, ckpt ? &*ckpt : nullptr);

    if (percentile_mode) {
        std::vector<double> max_sims;
        for (const auto& page : pages) {
            for (std::size_t s = 0; s < page.sentences.size(); ++s) {
                double best = -1.0;
                for (std::size_t j = 0; j < page.images.size(); ++j) {
                    best = std::max(best, page.similarity(s, j));
                }
                max_sims.push_back(best);
            }
        }
        std::tie(t_pos, t_neg) = percentile_thresholds(max_sims, top_frac, bottom_frac);
    }

    const auto result = auto_label(pages, t_pos, t_neg);
    std::vector<LabeledExample> corpus = result.positives;
    corpus.insert(corpus.end(), result.negatives.begin(), result.negatives.end());
    io::save_labeled_corpus(out_path, corpus);

    auto m = manifest("label", global, {pages_path}, out_path);
    if (!ckpt_path.empty()) m.input_paths.push_back(ckpt_path);
    io::write_manifest(m);
    std::cout << "t_pos=" << t_pos << " t_neg=" << t_neg
              << " positives=" << result.positives.size()
              << " negatives=" << result.negatives.size() << " discarded=" << result.discarded
              << "\n";
}

struct TrainCliOptions {
    std::string stage1_path;
    std::string stage2_path;
    std::string images_path;
    std::string out_path;
    std::string init_path;
    std::string log_path;
    std::string objective;
    int epochs1 = -1;
    int epochs2 = -1;
    double lr = -1.0;
    int batch_size = -1;
};

inline void cmd_train(const GlobalOptions& global, const TrainCliOptions& opt) {
    if (opt.stage1_path.empty() && opt.stage2_path.empty()) {
        throw parse_error("NoCorpus", "provide --stage1, --stage2, or both");
    }

    TrainConfig cfg;
    ModelConfig mcfg;
    if (!global.config_path.empty()) {
        const auto doc = io::parse_json(io::read_file(global.config_path), "train config");
        cfg = io::train_config_from_json(doc);
        if (doc.contains("model")) mcfg = io::model_config_from_json(doc["model"]);
    }
    cfg.seed = global.seed;
    if (opt.epochs1 >= 0) cfg.stage1_epochs = opt.epochs1;
    if (opt.epochs2 >= 0) cfg.stage2_epochs = opt.epochs2;
    if (opt.lr > 0.0) cfg.learning_rate = opt.lr;
    if (opt.batch_size > 0) cfg.batch_size = opt.batch_size;
    if (!opt.objective.empty()) cfg.objective = objective_from_string(opt.objective);

    std::vector<LabeledExample> stage1, stage2;
    if (!opt.stage1_path.empty()) stage1 = io::load_labeled_corpus(opt.stage1_path);
    if (!opt.stage2_path.empty()) stage2 = io::load_labeled_corpus(opt.stage2_path);

    ImageBank bank;
    if (!opt.images_path.empty()) bank = io::load_image_bank(opt.images_path);

    ModelCheckpoint m0;
    if (!opt.init_path.empty()) {
        m0 = io::load_checkpoint(opt.init_path);
    } else {
        mcfg.vocab = build_vocab({&stage1, &stage2});
        m0 = init_checkpoint(mcfg, cfg.seed);
    }

    TrainResult result;
    if (!opt.stage1_path.empty() && !opt.stage2_path.empty()) {
        result = two_stage_train(m0, stage1, stage2, bank, cfg);
    } else if (!opt.stage1_path.empty()) {
        result = train_stage(m0, stage1, bank, cfg, cfg.stage1_epochs, 1);
    } else {
        result = train_stage(m0, stage2, bank, cfg, cfg.stage2_epochs, 2);
    }

    io::save_checkpoint(opt.out_path, result.model);
    const std::string log_path = opt.log_path.empty() ? opt.out_path + ".log.jsonl" : opt.log_path;
    io::save_train_log(log_path, result.log);

    std::vector<std::string> inputs;
    for (const auto& p : {opt.stage1_path, opt.stage2_path, opt.images_path, opt.init_path}) {
        if (!p.empty()) inputs.push_back(p);
    }
    io::write_manifest(manifest("train", global, inputs, opt.out_path));
    for (const auto& e : result.log) {
        std::cout << "stage=" << e.stage << " epoch=" << e.epoch << " mean_loss=" << e.mean_loss
                  << "\n";
    }
}

inline void cmd_score(const GlobalOptions& global, const std::string& ckpt_path,
                      const std::string& input_path, const std::string& out_path,
                      double threshold) {
    const auto m = io::load_checkpoint(ckpt_path);
    const auto sentences = io::load_sentences(input_path);
    std::vector<io::ScoredSentence> scores;
    std::size_t skipped = 0;
    for (const auto& text : sentences) {
        if (text.empty()) {
            ++skipped;
            continue;
        }
        try {
            const auto s = visualness_score(m, text);
            scores.push_back({text, s.value, classify(s, threshold)});
        } catch (const Error& e) {
            if (e.name() == "EmptyText") {
                ++skipped;
                continue;
            }
            throw;
        }
    }
    io::save_scores(out_path, scores);
    io::write_manifest(manifest("score", global, {ckpt_path, input_path}, out_path));
    std::cout << "scored=" << scores.size() << " skipped=" << skipped << "\n";
}

struct BaselineCliOptions {
    std::string method;
    std::string input_path;
    std::string out_path;
    std::string lexicon_path;
    std::string embeddings_path;
    std::string objects_path;
    std::string train_labels_path;
    double threshold = -1.0;  // negative = per-method documented default
};

inline void cmd_baseline(const GlobalOptions& global, const BaselineCliOptions& opt) {
    const auto sentences = io::load_sentences(opt.input_path);
    std::vector<io::ScoredSentence> scores;
    std::size_t skipped = 0;
    std::vector<std::string> inputs{opt.input_path};

    const auto score_with = [&](auto&& score_fn, double threshold) {
        for (const auto& text : sentences) {
            if (text.empty()) {
                ++skipped;
                continue;
            }
            try {
                const double s = score_fn(text);
                scores.push_back(
                    {text, s, s >= threshold ? Label::visual : Label::non_visual});
            } catch (const Error& e) {
                if (e.name() == "EmptyText") {
                    ++skipped;
                    continue;
                }
                throw;
            }
        }
    };

    if (opt.method == "mrc" || opt.method == "mrc-prop") {
        if (opt.lexicon_path.empty()) {
            throw parse_error("MissingResource", "--lexicon is required for " + opt.method);
        }
        const auto lexicon_file = resolve_resource(opt.lexicon_path);
        inputs.push_back(lexicon_file.string());
        auto lex = normalize_lexicon(io::load_lexicon_file(lexicon_file));
        if (opt.method == "mrc-prop") {
            if (opt.embeddings_path.empty()) {
                throw parse_error("MissingResource", "--embeddings is required for mrc-prop");
            }
            const auto table_file = resolve_resource(opt.embeddings_path);
            inputs.push_back(table_file.string());
            lex = propagate(lex, io::load_embedding_table(table_file));
        }
        const double threshold = opt.threshold >= 0.0 ? opt.threshold : 0.17;
        score_with([&](const std::string& t) { return sentence_score_lexicon(t, lex); },
                   threshold);
    } else if (opt.method == "vg") {
        if (opt.objects_path.empty()) {
            throw parse_error("MissingResource", "--objects is required for vg");
        }
        const auto objects_file = resolve_resource(opt.objects_path);
        inputs.push_back(objects_file.string());
        const auto vocab = io::load_object_vocabulary(objects_file);
        const double threshold = opt.threshold >= 0.0 ? opt.threshold : 0.5;
        score_with([&](const std::string& t) { return sentence_score_vg(t, vocab); }, threshold);
    } else if (opt.method == "random") {
        if (opt.train_labels_path.empty()) {
            throw parse_error("MissingResource", "--train-labels is required for random");
        }
        inputs.push_back(opt.train_labels_path);
        const auto corpus = io::load_labeled_corpus(opt.train_labels_path);
        std::vector<Label> prior;
        for (const auto& ex : corpus) prior.push_back(ex.label);
        std::vector<std::string> usable;
        for (const auto& text : sentences) {
            if (text.empty()) {
                ++skipped;
            } else {
                usable.push_back(text);
            }
        }
        const auto labels = random_baseline(prior, usable.size(), global.seed);
        for (std::size_t i = 0; i < usable.size(); ++i) {
            scores.push_back({usable[i], labels[i] == Label::visual ? 1.0 : 0.0, labels[i]});
        }
    } else {
        throw parse_error("BadMethod", "unknown method '" + opt.method + "'");
    }

    io::save_scores(opt.out_path, scores);
    io::write_manifest(manifest("baseline", global, inputs, opt.out_path));
    std::cout << "scored=" << scores.size() << " skipped=" << skipped << "\n";
}

inline void cmd_eval(const GlobalOptions& global, const std::string& pred_path,
                     const std::string& gold_path, const std::string& out_path) {
    const auto pred = io::load_labeled_corpus(pred_path);
    const auto gold = io::load_labeled_corpus(gold_path);
    std::vector<Label> p, g;
    for (const auto& ex : pred) p.push_back(ex.label);
    for (const auto& ex : gold) g.push_back(ex.label);
    const auto report = classification_metrics(g, p);
    const std::string doc = io::metric_report_json(report);
    io::atomic_write_file(out_path, doc + "\n");
    io::write_manifest(manifest("eval", global, {pred_path, gold_path}, out_path));
    std::cout << doc << "\n";
}

inline void cmd_retrieve(const GlobalOptions& global, const std::string& ckpt_path,
                         const std::string& pairs_path, const std::string& bank_path,
                         const std::string& out_path) {
    const auto m = io::load_checkpoint(ckpt_path);
    const auto pairs = io::load_retrieval_pairs(pairs_path);
    const auto bank = io::load_image_bank(bank_path);
    const double mrr = retrieval_eval(m, pairs, bank);
    const std::string doc = "{\"mrr\":" + io::format6(mrr) + "}";
    io::atomic_write_file(out_path, doc + "\n");
    io::write_manifest(manifest("retrieve", global, {ckpt_path, pairs_path, bank_path}, out_path));
    std::cout << doc << "\n";
}

inline void cmd_agree(const GlobalOptions& global, const std::string& matrix_path,
                      const std::string& out_path, int levels) {
    const auto matrix = io::load_annotation_matrix(matrix_path, levels);
    const double alpha = krippendorff_alpha_ordinal(matrix);
    const std::string doc = "{\"alpha\":" + io::format6(alpha) + "}";
    io::atomic_write_file(out_path, doc + "\n");
    io::write_manifest(manifest("agree", global, {matrix_path}, out_path));
    std::cout << doc << "\n";
}

inline void cmd_calibrate(const GlobalOptions& global, const std::string& scores_path,
                          const std::string& gold_path, const std::string& out_path) {
    const auto scored = io::load_scores(scores_path);
    const auto gold = io::load_labeled_corpus(gold_path);
    if (scored.size() != gold.size()) {
        throw precondition_error("LengthMismatch", "scores and gold have different line counts");
    }
    std::vector<double> scores;
    std::vector<Label> labels;
    for (const auto& s : scored) scores.push_back(s.score);
    for (const auto& ex : gold) labels.push_back(ex.label);
    const double threshold = calibrate_threshold(scores, labels);
    // +-inf sentinels are JSON-hostile; render them as strings
    std::string rendered;
    if (std::isinf(threshold)) {
        rendered = threshold > 0 ? "\"inf\"" : "\"-inf\"";
    } else {
        rendered = io::format6(threshold);
    }
    const std::string doc = "{\"threshold\":" + rendered + "}";
    io::atomic_write_file(out_path, doc + "\n");
    io::write_manifest(manifest("calibrate", global, {scores_path, gold_path}, out_path));
    std::cout << doc << "\n";
}

inline void cmd_aggregate(const GlobalOptions& global, const std::string& annotations_path,
                          const std::string& out_path) {
    const auto records = io::load_annotations(annotations_path);
    std::string out;
    for (const auto& rec : records) {
        const auto label = aggregate_annotations(rec);
        out += "{\"text\":" + io::json(rec.text).dump() + ",\"label\":\"" + to_string(label) +
               "\"}\n";
    }
    io::atomic_write_file(out_path, out);
    io::write_manifest(manifest("aggregate", global, {annotations_path}, out_path));
    std::cout << "aggregated=" << records.size() << "\n";
}

inline void cmd_gen_synthetic(const GlobalOptions& global, const std::string& spec_path,
                              const std::string& outdir) {
    const auto spec =
        io::synthetic_spec_from_json(io::parse_json(io::read_file(spec_path), "synthetic spec"));
    const auto data = generate_synthetic(spec);
    fs::create_directories(outdir);
    const fs::path dir(outdir);
    io::save_labeled_corpus(dir / "corpus.jsonl", data.train);
    io::save_labeled_corpus(dir / "held_out.jsonl", data.held_out);
    io::save_image_bank(dir / "images.jsonl", data.images);
    io::save_retrieval_pairs(dir / "retrieval_pairs.jsonl", data.retrieval_pairs);
    io::write_manifest(manifest("gen-synthetic", global, {spec_path}, (dir / "data").string()));
    std::cout << "train=" << data.train.size() << " held_out=" << data.held_out.size()
              << " images=" << data.images.size() << " retrieval_pairs="
              << data.retrieval_pairs.size() << "\n";
}

inline void cmd_export_embeddings(const GlobalOptions& global, const std::string& ckpt_path,
                                  const std::string& corpus_path, const std::string& out_path,
                                  const std::string& images_path) {
    const auto m = io::load_checkpoint(ckpt_path);
    const auto corpus = io::load_labeled_corpus(corpus_path);
    std::optional<ImageBank> bank;
    if (!images_path.empty()) bank = io::load_image_bank(images_path);
    io::atomic_write_file(out_path, io::export_embeddings_tsv(m, corpus, bank ? &*bank : nullptr));
    std::vector<std::string> inputs{ckpt_path, corpus_path};
    if (!images_path.empty()) inputs.push_back(images_path);
    io::write_manifest(manifest("export-embeddings", global, inputs, out_path));
    std::cout << "exported=" << corpus.size() << " texts\n";
}

}  // namespace detail

// argv-style entry point; args[0] is the program name. Returns the process
// exit code.
inline int run(const std::vector<std::string>& args) {
    CLI::App app{"Sentence visualness scoring toolkit", "vizscore"};
    app.require_subcommand(1);

    detail::GlobalOptions global;
    app.add_option("--seed", global.seed, "Seed for seeded commands")->capture_default_str();
    app.add_option("--config", global.config_path, "Train config JSON");

    // label
    std::string pages_path, label_out, label_ckpt;
    double t_pos = 0.35, t_neg = 0.18, top_frac = 0.0, bottom_frac = 0.0;
    auto* label = app.add_subcommand("label", "Distant-label pages into a training corpus");
    label->add_option("pages", pages_path, "Pages JSONL")->required();
    label->add_option("out", label_out, "Output corpus JSONL")->required();
    label->add_option("--t-pos", t_pos, "Positive similarity threshold")->capture_default_str();
    label->add_option("--t-neg", t_neg, "Negative similarity threshold")->capture_default_str();
    auto* top_opt = label->add_option("--top-frac", top_frac, "Top fraction for percentile mode");
    auto* bottom_opt =
        label->add_option("--bottom-frac", bottom_frac, "Bottom fraction for percentile mode");
    top_opt->needs(bottom_opt);
    bottom_opt->needs(top_opt);
    label->add_option("--ckpt", label_ckpt, "Checkpoint for pages without similarity matrices");
    label->callback([&] {
        detail::cmd_label(global, pages_path, label_out, t_pos, t_neg, top_frac, bottom_frac,
                          top_opt->count() > 0, label_ckpt);
    });

    // train
    detail::TrainCliOptions train_opt;
    auto* train = app.add_subcommand("train", "Fine-tune the dual encoder");
    train->add_option("out", train_opt.out_path, "Output checkpoint JSON")->required();
    train->add_option("--stage1", train_opt.stage1_path, "Auto-labeled corpus JSONL");
    train->add_option("--stage2", train_opt.stage2_path, "Human-labeled corpus JSONL");
    train->add_option("--images", train_opt.images_path, "Image bank JSONL");
    train->add_option("--init", train_opt.init_path, "Initial checkpoint (default: fresh init)");
    train->add_option("--log", train_opt.log_path, "Epoch log path (default: <out>.log.jsonl)");
    train->add_option("--objective", train_opt.objective,
                      "null_anchored | classification_only");
    train->add_option("--epochs1", train_opt.epochs1, "Stage 1 epochs override");
    train->add_option("--epochs2", train_opt.epochs2, "Stage 2 epochs override");
    train->add_option("--lr", train_opt.lr, "Learning rate override");
    train->add_option("--batch-size", train_opt.batch_size, "Batch size override");
    train->callback([&] { detail::cmd_train(global, train_opt); });

    // score
    std::string score_ckpt, score_input, score_out;
    double score_threshold = 0.79;
    auto* score = app.add_subcommand("score", "Score sentence visualness with a checkpoint");
    score->add_option("ckpt", score_ckpt, "Checkpoint JSON")->required();
    score->add_option("input", score_input, "Sentences (.txt lines or .jsonl)")->required();
    score->add_option("out", score_out, "Output scores JSONL")->required();
    score->add_option("--threshold", score_threshold, "Visual decision threshold")
        ->capture_default_str();
    score->callback(
        [&] { detail::cmd_score(global, score_ckpt, score_input, score_out, score_threshold); });

    // baseline
    detail::BaselineCliOptions base_opt;
    auto* baseline = app.add_subcommand("baseline", "Lexicon/heuristic baseline scoring");
    baseline->add_option("--method", base_opt.method, "mrc | mrc-prop | vg | random")->required();
    baseline->add_option("input", base_opt.input_path, "Sentences (.txt or .jsonl)")->required();
    baseline->add_option("out", base_opt.out_path, "Output scores JSONL")->required();
    baseline->add_option("--lexicon", base_opt.lexicon_path, "Imageability lexicon TSV");
    baseline->add_option("--embeddings", base_opt.embeddings_path, "word2vec-text embeddings");
    baseline->add_option("--objects", base_opt.objects_path, "Object vocabulary, one per line");
    baseline->add_option("--train-labels", base_opt.train_labels_path,
                         "Labeled corpus for the random prior");
    baseline->add_option("--threshold", base_opt.threshold,
                         "Decision threshold (default 0.17 mrc/mrc-prop, 0.5 vg)");
    baseline->callback([&] { detail::cmd_baseline(global, base_opt); });

    // eval
    std::string eval_pred, eval_gold, eval_out;
    auto* eval = app.add_subcommand("eval", "Classification metrics of pred vs gold");
    eval->add_option("pred", eval_pred, "Predicted labels JSONL")->required();
    eval->add_option("gold", eval_gold, "Gold labels JSONL")->required();
    eval->add_option("out", eval_out, "Output metrics JSON")->required();
    eval->callback([&] { detail::cmd_eval(global, eval_pred, eval_gold, eval_out); });

    // retrieve
    std::string ret_ckpt, ret_pairs, ret_bank, ret_out;
    auto* retrieve = app.add_subcommand("retrieve", "Text-to-image retrieval MRR");
    retrieve->add_option("ckpt", ret_ckpt, "Checkpoint JSON")->required();
    retrieve->add_option("pairs", ret_pairs, "Pairs JSONL {text, image_id}")->required();
    retrieve->add_option("bank", ret_bank, "Image bank JSONL")->required();
    retrieve->add_option("out", ret_out, "Output JSON")->required();
    retrieve->callback(
        [&] { detail::cmd_retrieve(global, ret_ckpt, ret_pairs, ret_bank, ret_out); });

    // agree
    std::string agree_matrix, agree_out;
    int agree_levels = 7;
    auto* agree = app.add_subcommand("agree", "Ordinal Krippendorff alpha of an annotation matrix");
    agree->add_option("matrix", agree_matrix, "CSV, rows=units, cols=raters")->required();
    agree->add_option("out", agree_out, "Output JSON")->required();
    agree->add_option("--levels", agree_levels, "Number of ordinal levels")->capture_default_str();
    agree->callback([&] { detail::cmd_agree(global, agree_matrix, agree_out, agree_levels); });

    // calibrate
    std::string cal_scores, cal_gold, cal_out;
    auto* calibrate = app.add_subcommand("calibrate", "Pick the macro-F1-optimal threshold");
    calibrate->add_option("scores", cal_scores, "Scores JSONL")->required();
    calibrate->add_option("gold", cal_gold, "Gold labels JSONL")->required();
    calibrate->add_option("out", cal_out, "Output JSON")->required();
    calibrate->callback([&] { detail::cmd_calibrate(global, cal_scores, cal_gold, cal_out); });

    // aggregate
    std::string agg_in, agg_out;
    auto* aggregate = app.add_subcommand("aggregate", "Aggregate Likert annotations into labels");
    aggregate->add_option("annotations", agg_in, "Annotations JSONL")->required();
    aggregate->add_option("out", agg_out, "Output labels JSONL")->required();
    aggregate->callback([&] { detail::cmd_aggregate(global, agg_in, agg_out); });

    // gen-synthetic
    std::string gen_spec, gen_outdir;
    auto* gen = app.add_subcommand("gen-synthetic", "Generate a synthetic training corpus");
    gen->add_option("spec", gen_spec, "Synthetic spec JSON")->required();
    gen->add_option("outdir", gen_outdir, "Output directory")->required();
    gen->callback([&] { detail::cmd_gen_synthetic(global, gen_spec, gen_outdir); });

    // export-embeddings
    std::string exp_ckpt, exp_corpus, exp_out, exp_images;
    auto* exp = app.add_subcommand("export-embeddings", "Export embeddings as TSV");
    exp->add_option("ckpt", exp_ckpt, "Checkpoint JSON")->required();
    exp->add_option("corpus", exp_corpus, "Labeled corpus JSONL")->required();
    exp->add_option("out", exp_out, "Output TSV")->required();
    exp->add_option("--images", exp_images, "Image bank JSONL for image rows");
    exp->callback([&] {
        detail::cmd_export_embeddings(global, exp_ckpt, exp_corpus, exp_out, exp_images);
    });

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        if (!reversed.empty()) reversed.pop_back();  // drop program name
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

}  // namespace vizscore::cli
