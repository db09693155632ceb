#include "vizscore/io.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

using namespace vizscore;
namespace fs = std::filesystem;

namespace {

inline std::size_t next_dir_id() {
    static std::size_t id = 0;
    return id++;
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("vizscore_io_" + std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()) +
               "_" + std::to_string(next_dir_id()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    fs::path file(const std::string& name) const { return path / name; }
};

void write(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
}

const fs::path kFixtures{VIZSCORE_FIXTURE_DIR};

}  // namespace

TEST_CASE("lexicon TSV loads with comments and lowercasing", "[io]") {
    TempDir dir;
    write(dir.file("lex.tsv"), "# comment\nApple\t620\ncat\t100\n\nDog\t400\n");
    const auto raw = io::load_lexicon_file(dir.file("lex.tsv"));
    CHECK(raw.size() == 3);
    CHECK(raw.at("apple") == 620.0);
    CHECK(raw.at("dog") == 400.0);

    write(dir.file("bad.tsv"), "word-without-score\n");
    CHECK_THROWS_AS(io::load_lexicon_file(dir.file("bad.tsv")), Error);
    CHECK_THROWS_AS(io::load_lexicon_file(dir.file("missing.tsv")), Error);
}

TEST_CASE("word2vec text tables parse", "[io]") {
    const auto table = io::load_embedding_table(kFixtures / "embeddings_small.txt");
    CHECK(table.dim == 4);
    CHECK(table.entries.size() == 6);
    CHECK(table.entries.at("kitten") == RawVector{0.8, 0.6, 0.0, 0.0});

    TempDir dir;
    write(dir.file("short.txt"), "1 4\nword 0.1 0.2\n");
    CHECK_THROWS_AS(io::load_embedding_table(dir.file("short.txt")), Error);
    write(dir.file("nohdr.txt"), "word 0.1 0.2\n");
    CHECK_THROWS_AS(io::load_embedding_table(dir.file("nohdr.txt")), Error);
}

TEST_CASE("object vocabulary loads one name per line", "[io]") {
    const auto vocab = io::load_object_vocabulary(kFixtures / "objects_small.txt");
    CHECK(vocab.objects.count("apple") == 1);
    CHECK(vocab.objects.count("garbage can") == 1);  // stored whole; unigram match skips it
    CHECK(vocab.objects.size() == 6);
}

TEST_CASE("pages load with explicit similarity", "[io]") {
    const auto pages = io::load_pages(kFixtures / "pages_small.jsonl");
    REQUIRE(pages.size() == 2);
    CHECK(pages[0].sentences.size() == 3);
    CHECK(pages[0].images.size() == 2);
    CHECK(pages[0].similarity(0, 0) == 0.40);
    CHECK(pages[1].similarity(1, 1) == 0.17);
}

TEST_CASE("pages without similarity need a checkpoint", "[io]") {
    TempDir dir;
    const std::string page =
        R"({"page_id":"p","sentences":["a cat"],"images":[{"image_id":"i0","features":[1,0,0,0,0]}]})";
    write(dir.file("pages.jsonl"), page + "\n");
    CHECK_THROWS_AS(io::load_pages(dir.file("pages.jsonl")), Error);

    ModelConfig cfg;
    cfg.vocab = {"a", "cat"};
    cfg.d_tok = 4;
    cfg.d_hidden = 4;
    cfg.d_out = 3;
    cfg.d_img = 5;
    const auto m = init_checkpoint(cfg, 1);
    const auto pages = io::load_pages(dir.file("pages.jsonl"), &m);
    REQUIRE(pages.size() == 1);
    const double expected = inner(encode_image(m, {1, 0, 0, 0, 0}), encode_text(m, "a cat"));
    CHECK(pages[0].similarity(0, 0) == expected);
}

TEST_CASE("labeled corpus round trip", "[io]") {
    TempDir dir;
    std::vector<LabeledExample> corpus{
        {"a cat", Label::visual, "im1"},
        {"quoted \"text\" with \\ escapes", Label::non_visual, std::nullopt},
        {"unicode caf\xC3\xA9", Label::visual, "im2"},
    };
    io::save_labeled_corpus(dir.file("c.jsonl"), corpus);
    const auto loaded = io::load_labeled_corpus(dir.file("c.jsonl"));
    REQUIRE(loaded.size() == corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        CHECK(loaded[i].text == corpus[i].text);
        CHECK(loaded[i].label == corpus[i].label);
        CHECK(loaded[i].image_id == corpus[i].image_id);
    }

    SECTION("label/image inconsistency is rejected") {
        write(dir.file("bad.jsonl"), R"({"text":"x","label":"visual","image_id":null})" "\n");
        CHECK_THROWS_AS(io::load_labeled_corpus(dir.file("bad.jsonl")), Error);
    }
    SECTION("empty corpus file is rejected") {
        write(dir.file("empty.jsonl"), "");
        CHECK_THROWS_AS(io::load_labeled_corpus(dir.file("empty.jsonl")), Error);
    }
}

TEST_CASE("annotation matrix CSV handles missing cells", "[io]") {
    const auto m = io::load_annotation_matrix(kFixtures / "agreement_mixed.csv", 7);
    REQUIRE(m.ratings.size() == 5);
    CHECK(m.ratings[0][0] == 1);
    CHECK(!m.ratings[0][2].has_value());
    CHECK(!m.ratings[1][1].has_value());
    CHECK(m.ratings[4][2] == 3);

    TempDir dir;
    write(dir.file("bad.csv"), "1,x,3\n");
    CHECK_THROWS_AS(io::load_annotation_matrix(dir.file("bad.csv"), 7), Error);
}

TEST_CASE("checkpoint save/load round trip is exact", "[io]") {
    TempDir dir;
    ModelConfig cfg;
    cfg.vocab = {"alpha", "beta", "gamma"};
    cfg.d_tok = 5;
    cfg.d_hidden = 6;
    cfg.d_out = 4;
    cfg.d_img = 7;
    cfg.null_seed = 33;
    auto m = init_checkpoint(cfg, 9);
    m.params.log_inv_tau = 1.234567890123456;
    io::save_checkpoint(dir.file("m.json"), m);
    const auto loaded = io::load_checkpoint(dir.file("m.json"));

    CHECK(loaded.config.vocab == m.config.vocab);
    CHECK(loaded.config.null_seed == 33);
    CHECK(loaded.params.token_embeddings.data() == m.params.token_embeddings.data());
    CHECK(loaded.params.w1.data() == m.params.w1.data());
    CHECK(loaded.params.b1 == m.params.b1);
    CHECK(loaded.params.w2.data() == m.params.w2.data());
    CHECK(loaded.params.w_img.data() == m.params.w_img.data());
    CHECK(loaded.params.log_inv_tau == m.params.log_inv_tau);
    CHECK(loaded.null_features == m.null_features);

    SECTION("saving the loaded checkpoint reproduces the file byte for byte") {
        io::save_checkpoint(dir.file("m2.json"), loaded);
        CHECK(io::read_file(dir.file("m.json")) == io::read_file(dir.file("m2.json")));
    }
    SECTION("malformed checkpoints are rejected") {
        write(dir.file("bad1.json"), "{\"format_version\": 2}");
        CHECK_THROWS_AS(io::load_checkpoint(dir.file("bad1.json")), Error);
        write(dir.file("bad2.json"), "not json at all");
        CHECK_THROWS_AS(io::load_checkpoint(dir.file("bad2.json")), Error);
        // shape violation: drop a row from w1
        auto doc = io::parse_json(io::read_file(dir.file("m.json")), "ckpt");
        doc["params"]["w1"].erase(0);
        write(dir.file("bad3.json"), doc.dump());
        CHECK_THROWS_AS(io::load_checkpoint(dir.file("bad3.json")), Error);
        // temperature out of range
        doc = io::parse_json(io::read_file(dir.file("m.json")), "ckpt");
        doc["params"]["log_inv_tau"] = 9.9;
        write(dir.file("bad4.json"), doc.dump());
        CHECK_THROWS_AS(io::load_checkpoint(dir.file("bad4.json")), Error);
    }
}

TEST_CASE("scores round trip and 6-decimal rendering", "[io]") {
    TempDir dir;
    std::vector<io::ScoredSentence> scores{{"one", 0.8, Label::visual},
                                           {"two", 1.0 / 3.0, Label::non_visual}};
    io::save_scores(dir.file("s.jsonl"), scores);
    const std::string blob = io::read_file(dir.file("s.jsonl"));
    CHECK(blob.find("\"score\":0.800000") != std::string::npos);
    CHECK(blob.find("\"score\":0.333333") != std::string::npos);
    const auto loaded = io::load_scores(dir.file("s.jsonl"));
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].score == 0.8);
    CHECK(loaded[1].label == Label::non_visual);
}

TEST_CASE("sentence inputs come from txt lines or jsonl", "[io]") {
    TempDir dir;
    write(dir.file("s.txt"), "first line\n\nthird line\n");
    const auto txt = io::load_sentences(dir.file("s.txt"));
    REQUIRE(txt.size() == 3);
    CHECK(txt[1].empty());

    write(dir.file("s.jsonl"), R"({"text":"from json"})" "\n");
    const auto jsonl = io::load_sentences(dir.file("s.jsonl"));
    REQUIRE(jsonl.size() == 1);
    CHECK(jsonl[0] == "from json");
}

TEST_CASE("image bank round trip", "[io]") {
    TempDir dir;
    ImageBank bank{{"b", {1.0, 2.0}}, {"a", {-0.5, 0.25}}};
    io::save_image_bank(dir.file("bank.jsonl"), bank);
    CHECK(io::load_image_bank(dir.file("bank.jsonl")) == bank);
}

TEST_CASE("manifest is written next to the output", "[io]") {
    TempDir dir;
    io::RunManifest m;
    m.command = "label";
    m.input_paths = {"in.jsonl"};
    m.output_path = dir.file("out.jsonl").string();
    m.seed = 42;
    io::write_manifest(m);
    const auto doc =
        io::parse_json(io::read_file(dir.file("out.jsonl.manifest.json")), "manifest");
    CHECK(doc.at("command") == "label");
    CHECK(doc.at("seed") == 42);
    CHECK(doc.at("config_path").is_null());
    CHECK(doc.at("timestamp").get<std::string>().size() == 20);  // ISO-8601 Zulu
}

TEST_CASE("atomic write leaves no temp files", "[io]") {
    TempDir dir;
    io::atomic_write_file(dir.file("x.txt"), "payload");
    CHECK(io::read_file(dir.file("x.txt")) == "payload");
    std::size_t count = 0;
    for (const auto& entry : fs::directory_iterator(dir.path)) {
        (void)entry;
        ++count;
    }
    CHECK(count == 1);
}

TEST_CASE("embedding export schema", "[io]") {
    const auto m = io::load_checkpoint(kFixtures / "ckpt_tiny.json");
    const auto corpus = io::load_labeled_corpus(kFixtures / "corpus_tiny.jsonl");
    const auto bank = io::load_image_bank(kFixtures / "images_tiny.jsonl");
    const std::string tsv = io::export_embeddings_tsv(m, corpus, &bank);
    const auto lines = io::split_lines(tsv);
    REQUIRE(lines.size() == 1 + corpus.size() + bank.size() + 1);  // header + texts + images + null
    CHECK(lines[0] == "id\tkind\tv1\tv2\tv3\tv4\tv5\tv6");
    CHECK(lines[1].rfind("t0\ttext\t", 0) == 0);
    CHECK(lines.back().rfind("null\tnull\t", 0) == 0);
    std::size_t image_rows = 0;
    for (const auto& line : lines) {
        if (line.find("\timage\t") != std::string::npos) ++image_rows;
    }
    CHECK(image_rows == 3);
}
