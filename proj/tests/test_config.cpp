#include "doctest.h"
#include "sdgan/config.hpp"
#include "test_support.hpp"

#include <fstream>
#include <string>

using namespace sdgan;
using namespace sdgan::cfg;
using testsup::TempDir;

TEST_CASE("defaults cover every key with the documented values") {
    ConfigFile c = default_config();
    CHECK(c.values.size() == 29);
    CHECK(c.geti("train.epochs") == 200);
    CHECK(c.getd("train.lr0") == 2e-4);
    CHECK(c.geti("train.batch") == 1);
    CHECK(c.getu("train.seed") == 1);
    CHECK(c.getd("loss.alpha") == 100.0);
    CHECK(c.getd("loss.lambda") == 100.0);
    CHECK(c.getd("loss.delta") == 1.0);
    CHECK(c.getd("loss.eta") == 10.0);
    CHECK(c.gets("loss.adv_mode") == "nonsat");
    CHECK(c.gets("loss.ar_variance") == "intra");
    CHECK(c.getb("ablation.use_saliency"));
    CHECK(c.getb("ablation.use_layout"));
    CHECK(c.getb("ablation.use_arloss"));
    CHECK(c.getb("ablation.use_perceptual"));
    CHECK(c.getb("ablation.use_bce"));
    CHECK(c.geti("model.image_size") == 256);
    CHECK(c.geti("model.base_width") == 64);
    CHECK(c.geti("model.max_width") == 512);
    CHECK(c.gets("model.upsample") == "nearest");
    CHECK(c.gets("data.labels") == "canonical");
    CHECK(c.gets("oracle.extractor_path").empty());
}

TEST_CASE("parsing accepts comments and trims whitespace") {
    ConfigFile c = parse_config_text(
        "# a comment\n"
        "\n"
        "train.epochs = 5\n"
        "  loss.alpha=2.5  \n"
        "ablation.use_bce = false  # trailing note\n");
    CHECK(c.geti("train.epochs") == 5);
    CHECK(c.getd("loss.alpha") == 2.5);
    CHECK(!c.getb("ablation.use_bce"));
    // untouched keys keep their defaults
    CHECK(c.geti("model.image_size") == 256);
}

TEST_CASE("unknown keys and malformed values are rejected by name") {
    try {
        parse_config_text("train.epoch = 5\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("train.epoch") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config_text("train.epochs = soon\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("loss.alpha = 1.5x\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("ablation.use_bce = maybe\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("no equals sign\n"), ConfigError);
}

TEST_CASE("the canonical form is sorted and the digest keyed to content") {
    ConfigFile c = default_config();
    std::string text = canonical_text(c);
    // sorted keys: every line is >= its predecessor
    std::istringstream in(text);
    std::string line, prev;
    int lines = 0;
    while (std::getline(in, line)) {
        ++lines;
        CHECK(line.find(" = ") != std::string::npos);
        if (!prev.empty()) CHECK(prev < line);
        prev = line;
    }
    CHECK(lines == 29);

    std::uint64_t d0 = config_digest(c);
    CHECK(d0 == config_digest(parse_config_text(text)));
    ConfigFile c2 = parse_config_text("train.epochs = 201\n");
    CHECK(config_digest(c2) != d0);
}

TEST_CASE("files load like inline text and missing files are loud") {
    TempDir td("config");
    std::ofstream(td.sub("a.cfg")) << "train.seed = 42\nmodel.image_size = 64\n";
    ConfigFile c = load_config(td.sub("a.cfg"));
    CHECK(c.getu("train.seed") == 42);
    CHECK(c.geti("model.image_size") == 64);
    CHECK_THROWS_AS(load_config(td.sub("absent.cfg")), MissingFile);
}

TEST_CASE("training configs inherit the file and reject the unsupported") {
    ConfigFile c = parse_config_text(
        "train.epochs = 7\n"
        "train.seed = 9\n"
        "loss.lambda = 55\n"
        "loss.ar_variance = literal\n"
        "loss.adv_mode = literal\n"
        "ablation.use_layout = false\n"
        "model.image_size = 64\n"
        "model.base_width = 8\n"
        "model.max_width = 32\n"
        "model.si_hidden = 8\n"
        "model.d_base = 8\n"
        "model.upsample = bilinear\n");
    train::TrainConfig t = to_train_config(c);
    CHECK(t.epochs == 7);
    CHECK(t.seed == 9);
    CHECK(t.weights.lambda == 55.0);
    CHECK(t.ar_form == ar::VarianceForm::literal);
    CHECK(t.adv_literal);
    CHECK(!t.use_layout);
    CHECK(!t.gcfg.use_layout);
    CHECK(t.gcfg.image_size == 64);
    CHECK(t.dcfg.image_size == 64);
    CHECK(t.gcfg.bilinear_upsample);
    CHECK(t.config_digest == config_digest(c));

    CHECK_THROWS_AS(to_train_config(parse_config_text("train.batch = 2\n")), ConfigError);
    CHECK_THROWS_AS(to_train_config(parse_config_text("model.image_size = 100\n")), ConfigError);
    CHECK_THROWS_AS(to_train_config(parse_config_text("loss.adv_mode = wgan\n")), ConfigError);
    CHECK_THROWS_AS(to_train_config(parse_config_text("loss.ar_variance = other\n")), ConfigError);
    CHECK_THROWS_AS(to_train_config(parse_config_text("model.upsample = cubic\n")), ConfigError);
    CHECK_THROWS_AS(to_train_config(parse_config_text("data.labels = voc\n")), ConfigError);
    CHECK_THROWS_AS(to_train_config(parse_config_text("train.epochs = 0\n")), ConfigError);
    CHECK_THROWS_AS(to_train_config(parse_config_text("model.base_width = 0\n")), ConfigError);
}
