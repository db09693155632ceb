#pragma once

// File formats: lexicon TSV, word2vec-text embedding tables, object
// vocabularies, JSONL corpora (pages, labeled examples, annotations, image
// banks, scores, retrieval pairs), checkpoint JSON, annotation-matrix CSV,
// run manifests, and the embedding TSV export. Writers are atomic
// (temp file + rename) and byte-deterministic for fixed inputs.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vizscore/core.hpp"
#include "vizscore/evalsuite.hpp"
#include "vizscore/labeler.hpp"
#include "vizscore/lexicon.hpp"
#include "vizscore/model.hpp"
#include "vizscore/trainer.hpp"
#include "vizscore/types.hpp"

namespace vizscore::io {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Small helpers

inline std::string format6(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", x);
    return buf;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw parse_error("FileNotFound", "cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw parse_error("WriteFailed", "cannot write '" + tmp + "'");
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

// Splits into lines, dropping trailing '\r' and the final empty line.
inline std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string current;
    for (char c : text) {
        if (c == '\n') {
            if (!current.empty() && current.back() == '\r') current.pop_back();
            lines.push_back(current);
            current.clear();
        } else {
            current += c;
        }
    }
    if (!current.empty()) {
        if (current.back() == '\r') current.pop_back();
        lines.push_back(current);
    }
    return lines;
}

inline json parse_json(const std::string& text, const std::string& what) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw parse_error("BadJson", "malformed JSON in " + what);
    return j;
}

inline RawVector parse_vector(const json& j, const std::string& what) {
    if (!j.is_array()) throw parse_error("BadJson", what + " must be an array of numbers");
    RawVector v;
    v.reserve(j.size());
    for (const auto& x : j) {
        if (!x.is_number()) throw parse_error("BadJson", what + " must contain only numbers");
        v.push_back(x.get<double>());
    }
    return v;
}

// ---------------------------------------------------------------------------
// Lexicon / embeddings / object vocabulary

// UTF-8 TSV, one "word<TAB>score" per line; '#' starts a comment line.
// Words are ASCII-lowercased on load.
inline std::map<std::string, double> load_lexicon_file(const std::filesystem::path& path) {
    std::map<std::string, double> raw;
    for (const auto& line : split_lines(read_file(path))) {
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0) {
            throw parse_error("BadLexicon", "expected 'word<TAB>score' in '" + line + "'");
        }
        const std::string word = ascii_lower(line.substr(0, tab));
        try {
            raw[word] = std::stod(line.substr(tab + 1));
        } catch (const std::exception&) {
            throw parse_error("BadLexicon", "bad score in '" + line + "'");
        }
    }
    if (raw.empty()) throw parse_error("BadLexicon", "no entries in '" + path.string() + "'");
    return raw;
}

// word2vec text format: header "count dim", then "word v1 ... v_dim".
inline EmbeddingTable load_embedding_table(const std::filesystem::path& path) {
    const auto lines = split_lines(read_file(path));
    if (lines.empty()) throw parse_error("BadEmbeddings", "empty file '" + path.string() + "'");
    std::istringstream header(lines[0]);
    std::size_t count = 0, dim = 0;
    if (!(header >> count >> dim) || dim == 0) {
        throw parse_error("BadEmbeddings", "expected 'count dim' header");
    }
    EmbeddingTable table;
    table.dim = dim;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        std::istringstream row(lines[i]);
        std::string word;
        row >> word;
        RawVector v(dim);
        for (auto& x : v) {
            if (!(row >> x)) {
                throw parse_error("BadEmbeddings", "short vector for word '" + word + "'");
            }
        }
        check_finite(v, ("embedding for '" + word + "'").c_str());
        table.entries[ascii_lower(word)] = std::move(v);
    }
    // a count mismatch with the header is tolerated; some exporters misreport it
    if (table.entries.empty()) throw parse_error("BadEmbeddings", "no vectors found");
    return table;
}

inline ObjectVocabulary load_object_vocabulary(const std::filesystem::path& path) {
    ObjectVocabulary vocab;
    for (const auto& line : split_lines(read_file(path))) {
        if (line.empty() || line[0] == '#') continue;
        vocab.objects.insert(ascii_lower(line));
    }
    if (vocab.objects.empty()) throw parse_error("BadVocabulary", "no object names found");
    return vocab;
}

// ---------------------------------------------------------------------------
// Pages

// JSONL: {"page_id", "sentences":[...], "images":[{"image_id","features":[...]}],
// "similarity":[[...]]}. "similarity" may be omitted when every image carries
// features and a checkpoint is supplied to compute it.
inline std::vector<PageRecord> load_pages(const std::filesystem::path& path,
                                          const ModelCheckpoint* for_similarity = nullptr) {
    std::vector<PageRecord> pages;
    for (const auto& line : split_lines(read_file(path))) {
        if (line.empty()) continue;
        const json j = parse_json(line, "pages file");
        PageRecord page;
        page.page_id = j.value("page_id", "");
        if (!j.contains("sentences") || !j["sentences"].is_array()) {
            throw parse_error("BadPage", "page '" + page.page_id + "' lacks sentences");
        }
        for (const auto& s : j["sentences"]) page.sentences.push_back(s.get<std::string>());
        if (j.contains("images")) {
            for (const auto& im : j["images"]) {
                PageImage img;
                img.image_id = im.at("image_id").get<std::string>();
                if (im.contains("features")) img.features = parse_vector(im["features"], "features");
                page.images.push_back(std::move(img));
            }
        }
        if (j.contains("similarity")) {
            const auto& sim = j["similarity"];
            page.similarity = Matrix(page.sentences.size(), page.images.size());
            if (!sim.is_array() || sim.size() != page.sentences.size()) {
                throw parse_error("BadPage", "similarity row count mismatch on page '" +
                                                 page.page_id + "'");
            }
            for (std::size_t r = 0; r < sim.size(); ++r) {
                const auto row = parse_vector(sim[r], "similarity row");
                if (row.size() != page.images.size()) {
                    throw parse_error("BadPage", "similarity column count mismatch on page '" +
                                                     page.page_id + "'");
                }
                for (std::size_t c = 0; c < row.size(); ++c) page.similarity(r, c) = row[c];
            }
        } else {
            if (!for_similarity) {
                throw parse_error("BadPage", "page '" + page.page_id +
                                                 "' has no similarity matrix and no checkpoint "
                                                 "was given to compute one");
            }
            page.similarity = Matrix(page.sentences.size(), page.images.size());
            std::vector<UnitEmbedding> image_embs;
            for (const auto& img : page.images) {
                image_embs.push_back(encode_image(*for_similarity, img.features));
            }
            for (std::size_t r = 0; r < page.sentences.size(); ++r) {
                const auto t = encode_text(*for_similarity, page.sentences[r]);
                for (std::size_t c = 0; c < image_embs.size(); ++c) {
                    page.similarity(r, c) = inner(image_embs[c], t);
                }
            }
        }
        page.check();
        pages.push_back(std::move(page));
    }
    if (pages.empty()) throw parse_error("EmptyPages", "no pages in '" + path.string() + "'");
    return pages;
}

// ---------------------------------------------------------------------------
// Labeled corpus

inline std::string labeled_example_line(const LabeledExample& ex) {
    std::string out = "{\"text\":" + json(ex.text).dump() + ",\"label\":\"";
    out += to_string(ex.label);
    out += "\",\"image_id\":";
    out += ex.image_id ? json(*ex.image_id).dump() : "null";
    out += "}";
    return out;
}

inline std::vector<LabeledExample> load_labeled_corpus(const std::filesystem::path& path) {
    std::vector<LabeledExample> corpus;
    for (const auto& line : split_lines(read_file(path))) {
        if (line.empty()) continue;
        const json j = parse_json(line, "labeled corpus");
        LabeledExample ex;
        ex.text = j.at("text").get<std::string>();
        ex.label = label_from_string(j.at("label").get<std::string>());
        if (j.contains("image_id") && !j["image_id"].is_null()) {
            ex.image_id = j["image_id"].get<std::string>();
        }
        if (!ex.consistent()) {
            throw parse_error("BadExample",
                              "label/image mismatch for '" + ex.text + "' in corpus file");
        }
        corpus.push_back(std::move(ex));
    }
    if (corpus.empty()) throw parse_error("EmptyCorpus", "no examples in '" + path.string() + "'");
    return corpus;
}

inline void save_labeled_corpus(const std::filesystem::path& path,
                                const std::vector<LabeledExample>& corpus) {
    std::string out;
    for (const auto& ex : corpus) out += labeled_example_line(ex) + "\n";
    atomic_write_file(path, out);
}

// ---------------------------------------------------------------------------
// Annotations

inline std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path) {
    std::vector<AnnotationRecord> records;
    for (const auto& line : split_lines(read_file(path))) {
        if (line.empty()) continue;
        const json j = parse_json(line, "annotations");
        AnnotationRecord rec;
        rec.text = j.at("text").get<std::string>();
        for (const auto& r : j.at("ratings")) rec.ratings.push_back(r.get<int>());
        records.push_back(std::move(rec));
    }
    if (records.empty()) throw parse_error("EmptyAnnotations", "no records found");
    return records;
}

// CSV, rows = units, columns = raters, empty cell = missing rating.
inline AnnotationMatrix load_annotation_matrix(const std::filesystem::path& path,
                                               int level_count) {
    AnnotationMatrix m;
    m.level_count = level_count;
    for (const auto& line : split_lines(read_file(path))) {
        if (line.empty()) continue;
        std::vector<std::optional<int>> row;
        std::string cell;
        std::istringstream ss(line);
        while (std::getline(ss, cell, ',')) {
            std::string trimmed;
            for (char c : cell) {
                if (c != ' ' && c != '\t') trimmed += c;
            }
            if (trimmed.empty()) {
                row.emplace_back(std::nullopt);
            } else {
                try {
                    row.emplace_back(std::stoi(trimmed));
                } catch (const std::exception&) {
                    throw parse_error("BadMatrix", "non-integer cell '" + cell + "'");
                }
            }
        }
        if (!line.empty() && line.back() == ',') row.emplace_back(std::nullopt);
        m.ratings.push_back(std::move(row));
    }
    if (m.ratings.empty()) throw parse_error("BadMatrix", "no rows in '" + path.string() + "'");
    return m;
}

// ---------------------------------------------------------------------------
// Image bank and retrieval pairs

inline ImageBank load_image_bank(const std::filesystem::path& path) {
    ImageBank bank;
    for (const auto& line : split_lines(read_file(path))) {
        if (line.empty()) continue;
        const json j = parse_json(line, "image bank");
        bank[j.at("image_id").get<std::string>()] = parse_vector(j.at("features"), "features");
    }
    if (bank.empty()) throw parse_error("EmptyBank", "no images in '" + path.string() + "'");
    return bank;
}

inline void save_image_bank(const std::filesystem::path& path, const ImageBank& bank) {
    std::string out;
    for (const auto& [id, features] : bank) {
        out += "{\"image_id\":" + json(id).dump() + ",\"features\":" + json(features).dump() +
               "}\n";
    }
    atomic_write_file(path, out);
}

inline std::vector<std::pair<std::string, std::string>> load_retrieval_pairs(
    const std::filesystem::path& path) {
    std::vector<std::pair<std::string, std::string>> pairs;
    for (const auto& line : split_lines(read_file(path))) {
        if (line.empty()) continue;
        const json j = parse_json(line, "retrieval pairs");
        pairs.emplace_back(j.at("text").get<std::string>(), j.at("image_id").get<std::string>());
    }
    if (pairs.empty()) throw parse_error("EmptyPairs", "no pairs in '" + path.string() + "'");
    return pairs;
}

inline void save_retrieval_pairs(const std::filesystem::path& path,
                                 const std::vector<std::pair<std::string, std::string>>& pairs) {
    std::string out;
    for (const auto& [text, id] : pairs) {
        out += "{\"text\":" + json(text).dump() + ",\"image_id\":" + json(id).dump() + "}\n";
    }
    atomic_write_file(path, out);
}

// ---------------------------------------------------------------------------
// Scores

struct ScoredSentence {
    std::string text;
    double score = 0.0;
    Label label = Label::non_visual;
};

inline std::string scored_sentence_line(const ScoredSentence& s) {
    return "{\"text\":" + json(s.text).dump() + ",\"score\":" + format6(s.score) +
           ",\"label\":\"" + to_string(s.label) + "\"}";
}

inline void save_scores(const std::filesystem::path& path,
                        const std::vector<ScoredSentence>& scores) {
    std::string out;
    for (const auto& s : scores) out += scored_sentence_line(s) + "\n";
    atomic_write_file(path, out);
}

inline std::vector<ScoredSentence> load_scores(const std::filesystem::path& path) {
    std::vector<ScoredSentence> scores;
    for (const auto& line : split_lines(read_file(path))) {
        if (line.empty()) continue;
        const json j = parse_json(line, "scores");
        ScoredSentence s;
        s.text = j.value("text", "");
        s.score = j.at("score").get<double>();
        if (j.contains("label")) s.label = label_from_string(j["label"].get<std::string>());
        scores.push_back(std::move(s));
    }
    if (scores.empty()) throw parse_error("EmptyScores", "no scores in '" + path.string() + "'");
    return scores;
}

// Sentence inputs: a .jsonl file with {"text": ...} lines, or plain text
// with one sentence per line. Blank lines are returned as empty strings so
// the caller can count the skips.
inline std::vector<std::string> load_sentences(const std::filesystem::path& path) {
    const bool jsonl = path.extension() == ".jsonl";
    std::vector<std::string> sentences;
    for (const auto& line : split_lines(read_file(path))) {
        if (line.empty()) {
            sentences.emplace_back();
        } else if (jsonl) {
            sentences.push_back(parse_json(line, "sentences").at("text").get<std::string>());
        } else {
            sentences.push_back(line);
        }
    }
    return sentences;
}

// ---------------------------------------------------------------------------
// Checkpoint

inline json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Matrix matrix_from_json(const json& j, std::size_t rows, std::size_t cols,
                               const std::string& name) {
    if (!j.is_array() || j.size() != rows) {
        throw parse_error("BadCheckpoint", "param '" + name + "' has wrong row count");
    }
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const auto row = parse_vector(j[r], name);
        if (row.size() != cols) {
            throw parse_error("BadCheckpoint", "param '" + name + "' has wrong column count");
        }
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = row[c];
    }
    return m;
}

inline void save_checkpoint(const std::filesystem::path& path, const ModelCheckpoint& m) {
    json config{{"vocab", m.config.vocab},       {"d_tok", m.config.d_tok},
                {"d_hidden", m.config.d_hidden}, {"d_out", m.config.d_out},
                {"d_img", m.config.d_img},       {"null_seed", m.config.null_seed},
                {"max_tokens", m.config.max_tokens}};
    json params{{"token_embeddings", matrix_to_json(m.params.token_embeddings)},
                {"w1", matrix_to_json(m.params.w1)},
                {"b1", m.params.b1},
                {"w2", matrix_to_json(m.params.w2)},
                {"b2", m.params.b2},
                {"w_img", matrix_to_json(m.params.w_img)},
                {"b_img", m.params.b_img},
                {"log_inv_tau", m.params.log_inv_tau},
                {"null_features", m.null_features}};
    json doc{{"format_version", 1}, {"config", config}, {"params", params}};
    atomic_write_file(path, doc.dump(2) + "\n");
}

inline ModelCheckpoint load_checkpoint(const std::filesystem::path& path) {
    const json doc = parse_json(read_file(path), "checkpoint");
    if (doc.value("format_version", 0) != 1) {
        throw parse_error("BadCheckpoint", "unsupported or missing format_version");
    }
    ModelCheckpoint m;
    try {
        const auto& config = doc.at("config");
        m.config.vocab = config.at("vocab").get<std::vector<std::string>>();
        m.config.d_tok = config.at("d_tok").get<int>();
        m.config.d_hidden = config.at("d_hidden").get<int>();
        m.config.d_out = config.at("d_out").get<int>();
        m.config.d_img = config.at("d_img").get<int>();
        m.config.null_seed = config.at("null_seed").get<std::uint64_t>();
        m.config.max_tokens = config.at("max_tokens").get<int>();
        m.config.check();

        const auto& params = doc.at("params");
        const auto rows = m.config.vocab.size() + 1;
        m.params.token_embeddings =
            matrix_from_json(params.at("token_embeddings"), rows,
                             static_cast<std::size_t>(m.config.d_tok), "token_embeddings");
        m.params.w1 = matrix_from_json(params.at("w1"), static_cast<std::size_t>(m.config.d_tok),
                                       static_cast<std::size_t>(m.config.d_hidden), "w1");
        m.params.b1 = parse_vector(params.at("b1"), "b1");
        m.params.w2 =
            matrix_from_json(params.at("w2"), static_cast<std::size_t>(m.config.d_hidden),
                             static_cast<std::size_t>(m.config.d_out), "w2");
        m.params.b2 = parse_vector(params.at("b2"), "b2");
        m.params.w_img =
            matrix_from_json(params.at("w_img"), static_cast<std::size_t>(m.config.d_img),
                             static_cast<std::size_t>(m.config.d_out), "w_img");
        m.params.b_img = parse_vector(params.at("b_img"), "b_img");
        m.params.log_inv_tau = params.at("log_inv_tau").get<double>();
        m.null_features = parse_vector(params.at("null_features"), "null_features");
    } catch (const json::exception& e) {
        throw parse_error("BadCheckpoint", e.what());
    }
    if (m.params.b1.size() != static_cast<std::size_t>(m.config.d_hidden) ||
        m.params.b2.size() != static_cast<std::size_t>(m.config.d_out) ||
        m.params.b_img.size() != static_cast<std::size_t>(m.config.d_out) ||
        m.null_features.size() != static_cast<std::size_t>(m.config.d_img)) {
        throw parse_error("BadCheckpoint", "parameter shapes do not match the config");
    }
    ParamSet copy = m.params;
    bool finite = all_finite(m.null_features);
    for_each_coord(copy, [&](double& x) { finite = finite && std::isfinite(x); });
    if (!finite) throw parse_error("BadCheckpoint", "non-finite parameter values");
    const double inv_tau = std::exp(m.params.log_inv_tau);
    if (inv_tau < kMinInvTau - 1e-9 || inv_tau > kMaxInvTau + 1e-9) {
        throw parse_error("BadCheckpoint", "exp(log_inv_tau) outside [1, 100]");
    }
    rebuild_token_index(m);
    return m;
}

// ---------------------------------------------------------------------------
// Configs

inline TrainConfig train_config_from_json(const json& j) {
    TrainConfig cfg;
    cfg.stage1_epochs = j.value("stage1_epochs", cfg.stage1_epochs);
    cfg.stage2_epochs = j.value("stage2_epochs", cfg.stage2_epochs);
    cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.adam_beta1 = j.value("adam_beta1", cfg.adam_beta1);
    cfg.adam_beta2 = j.value("adam_beta2", cfg.adam_beta2);
    cfg.adam_eps = j.value("adam_eps", cfg.adam_eps);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("objective")) {
        cfg.objective = objective_from_string(j["objective"].get<std::string>());
    }
    cfg.objective_options.mask_duplicate_nulls =
        j.value("mask_duplicate_nulls", cfg.objective_options.mask_duplicate_nulls);
    return cfg;
}

inline ModelConfig model_config_from_json(const json& j) {
    ModelConfig cfg;
    cfg.d_tok = j.value("d_tok", cfg.d_tok);
    cfg.d_hidden = j.value("d_hidden", cfg.d_hidden);
    cfg.d_out = j.value("d_out", cfg.d_out);
    cfg.d_img = j.value("d_img", cfg.d_img);
    cfg.null_seed = j.value("null_seed", cfg.null_seed);
    cfg.max_tokens = j.value("max_tokens", cfg.max_tokens);
    return cfg;
}

inline SyntheticSpec synthetic_spec_from_json(const json& j) {
    SyntheticSpec spec;
    spec.n_topics = j.value("n_topics", spec.n_topics);
    spec.n_visual = j.value("n_visual", spec.n_visual);
    spec.n_nonvisual = j.value("n_nonvisual", spec.n_nonvisual);
    if (j.contains("sentence_len_range")) {
        const auto& r = j["sentence_len_range"];
        if (!r.is_array() || r.size() != 2) {
            throw parse_error("BadSpec", "sentence_len_range must be [min, max]");
        }
        spec.sentence_len_range = {r[0].get<int>(), r[1].get<int>()};
    }
    spec.noise_sigma = j.value("noise_sigma", spec.noise_sigma);
    spec.seed = j.value("seed", spec.seed);
    spec.feature_dim = j.value("feature_dim", spec.feature_dim);
    spec.check();
    return spec;
}

// ---------------------------------------------------------------------------
// Metrics / reports

inline std::string metric_report_json(const MetricReport& r) {
    std::string out = "{\"macro_f1\":" + format6(r.macro_f1) +
                      ",\"macro_precision\":" + format6(r.macro_precision) +
                      ",\"macro_recall\":" + format6(r.macro_recall) +
                      ",\"accuracy\":" + format6(r.accuracy) + ",\"per_class\":{";
    bool first = true;
    for (const auto& [name, cm] : r.per_class) {
        if (!first) out += ",";
        first = false;
        out += json(name).dump() + ":{\"precision\":" + format6(cm.precision) +
               ",\"recall\":" + format6(cm.recall) + ",\"f1\":" + format6(cm.f1) +
               ",\"support\":" + std::to_string(cm.support) + "}";
    }
    out += "}}";
    return out;
}

// ---------------------------------------------------------------------------
// Training log and manifest

inline void save_train_log(const std::filesystem::path& path,
                           const std::vector<EpochStat>& log) {
    std::string out;
    for (const auto& e : log) {
        out += "{\"stage\":" + std::to_string(e.stage) + ",\"epoch\":" + std::to_string(e.epoch) +
               ",\"mean_loss\":" + format6(e.mean_loss) + "}\n";
    }
    atomic_write_file(path, out);
}

struct RunManifest {
    std::string command;
    std::optional<std::string> config_path;
    std::vector<std::string> input_paths;
    std::string output_path;
    std::uint64_t seed = 0;
};

inline std::string iso8601_utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Written next to every output as "<output>.manifest.json".
inline void write_manifest(const RunManifest& manifest) {
    json doc{{"command", manifest.command},
             {"config_path", manifest.config_path ? json(*manifest.config_path) : json(nullptr)},
             {"input_paths", manifest.input_paths},
             {"output_path", manifest.output_path},
             {"seed", manifest.seed},
             {"timestamp", iso8601_utc_now()}};
    atomic_write_file(manifest.output_path + ".manifest.json", doc.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Embedding export (for external visualization)

// TSV schema: id<TAB>kind<TAB>v1..vd with kind in {text, image, null}.
inline std::string export_embeddings_tsv(const ModelCheckpoint& m,
                                         const std::vector<LabeledExample>& corpus,
                                         const ImageBank* bank) {
    std::ostringstream out;
    out << "id\tkind";
    for (int d = 1; d <= m.config.d_out; ++d) out << "\tv" << d;
    out << "\n";
    const auto emit = [&](const std::string& id, const char* kind, const UnitEmbedding& e) {
        out << id << '\t' << kind;
        for (std::size_t d = 0; d < e.dim(); ++d) out << '\t' << format6(e[d]);
        out << '\n';
    };
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        emit("t" + std::to_string(i), "text", encode_text(m, corpus[i].text));
    }
    if (bank) {
        std::vector<std::string> seen;
        for (const auto& ex : corpus) {
            if (!ex.image_id || !bank->count(*ex.image_id)) continue;
            if (std::find(seen.begin(), seen.end(), *ex.image_id) != seen.end()) continue;
            seen.push_back(*ex.image_id);
            emit(*ex.image_id, "image", encode_image(m, bank->at(*ex.image_id)));
        }
    }
    emit("null", "null", null_embedding(m));
    return out.str();
}

}  // namespace vizscore::io
