#include "doctest.h"
#include "sdgan/dataio.hpp"
#include "sdgan/rng.hpp"
#include "test_support.hpp"

#include <cmath>
#include <filesystem>
#include <set>

using namespace sdgan;
using namespace sdgan::data;
using testsup::TempDir;
namespace fs = std::filesystem;

namespace {

PairedSample scan_sample(Rng& rng, const std::string& id) {
    PairedSample s;
    s.id = id;
    s.photo = Tensor({3, kRawHeight, kRawWidth});
    s.sketch = Tensor({1, kRawHeight, kRawWidth});
    s.saliency = Tensor({1, kRawHeight, kRawWidth});
    for (std::int64_t i = 0; i < s.photo.numel(); ++i) s.photo[i] = rng.uniform(-0.9, 0.9);
    for (std::int64_t i = 0; i < s.sketch.numel(); ++i) s.sketch[i] = rng.uniform(-0.9, 0.9);
    for (std::int64_t i = 0; i < s.saliency.numel(); ++i) s.saliency[i] = rng.uniform(-0.9, 0.9);
    s.layout = SemanticLayout(kRawHeight, kRawWidth);
    for (int y = 0; y < kRawHeight; ++y)
        for (int x = 0; x < kRawWidth; ++x)
            s.layout.at(y, x) = static_cast<std::uint8_t>((y / 40 + x / 40) % kNumClasses);
    return s;
}

}  // namespace

TEST_CASE("fixture samples are valid and deterministic") {
    auto a = make_fixture(7, 3, 64);
    REQUIRE(a.size() == 3);
    for (const auto& s : a) {
        CHECK_NOTHROW(validate_sample(s, true));
        CHECK(s.photo.shape() == std::vector<int>{3, 64, 64});
        CHECK(s.sketch.shape() == std::vector<int>{1, 64, 64});
        std::set<int> classes;
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 64; ++x) classes.insert(s.layout.at(y, x));
        CHECK(classes.size() >= 4);
    }
    CHECK(a[0].id == "fx0000");
    CHECK(a[2].id == "fx0002");

    auto b = make_fixture(7, 3, 64);
    for (std::int64_t i = 0; i < a[1].photo.numel(); ++i) CHECK(a[1].photo[i] == b[1].photo[i]);

    auto c = make_fixture(8, 3, 64);
    bool differs = false;
    for (std::int64_t i = 0; i < a[1].photo.numel() && !differs; ++i)
        differs = a[1].photo[i] != c[1].photo[i];
    CHECK(differs);
}

TEST_CASE("fixture rejects bad parameters") {
    CHECK_THROWS_AS(make_fixture(1, 0, 64), BadShape);
    CHECK_THROWS_AS(make_fixture(1, 2, 48), BadShape);
    CHECK_THROWS_AS(make_fixture(1, 2, 16), BadShape);
}

TEST_CASE("dataset write and load round-trip") {
    TempDir td("dataio");
    auto samples = make_fixture(11, 3, 32);
    write_dataset(samples, td.path(), "train");

    auto m = load_manifest(td.path(), "train");
    REQUIRE(m.entries.size() == 3);
    CHECK(m.split == "train");
    CHECK(m.entries[0].id == "fx0000");
    CHECK(m.entries[1].id == "fx0001");

    for (std::size_t i = 0; i < samples.size(); ++i) {
        PairedSample got = load_sample(m.entries[i], LabelTable::canonical, true);
        CHECK(got.id == samples[i].id);
        REQUIRE(got.photo.shape() == samples[i].photo.shape());
        // png storage quantizes to 8 bits; half a step each direction
        for (std::int64_t j = 0; j < got.photo.numel(); ++j)
            CHECK(std::abs(got.photo[j] - samples[i].photo[j]) <= 1.0 / 255.0 + 1e-12);
        for (std::int64_t j = 0; j < got.sketch.numel(); ++j)
            CHECK(std::abs(got.sketch[j] - samples[i].sketch[j]) <= 1.0 / 255.0 + 1e-12);
        // layout ids survive exactly
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 32; ++x)
                CHECK(got.layout.at(y, x) == samples[i].layout.at(y, x));
    }
}

TEST_CASE("manifest loading reports what is missing") {
    TempDir td("dataio-miss");
    CHECK_THROWS_AS(load_manifest(td.sub("absent"), "train"), MissingFile);

    auto samples = make_fixture(5, 2, 32);
    write_dataset(samples, td.path(), "train");
    fs::remove(fs::path(td.path()) / "train" / "saliency" / "fx0001.png");
    try {
        load_manifest(td.path(), "train");
        FAIL("expected MissingFile");
    } catch (const MissingFile& e) {
        CHECK(std::string(e.what()).find("fx0001") != std::string::npos);
    }

    fs::create_directories(fs::path(td.sub("bare")) / "train" / "photos");
    fs::create_directories(fs::path(td.sub("bare")) / "train" / "sketches");
    fs::create_directories(fs::path(td.sub("bare")) / "train" / "saliency");
    fs::create_directories(fs::path(td.sub("bare")) / "train" / "parsing");
    CHECK_THROWS_AS(load_manifest(td.sub("bare"), "train"), EmptyDataset);
}

TEST_CASE("inference manifest tolerates missing sketches") {
    TempDir td("dataio-infer");
    auto samples = make_fixture(3, 2, 32);
    write_dataset(samples, td.path(), "infer");
    fs::remove(fs::path(td.path()) / "infer" / "sketches" / "fx0000.png");

    auto m = load_infer_manifest((fs::path(td.path()) / "infer").string());
    REQUIRE(m.entries.size() == 2);
    CHECK(m.entries[0].sketch_path.empty());
    CHECK(!m.entries[1].sketch_path.empty());

    PairedSample s0 = load_sample(m.entries[0], LabelTable::canonical, false);
    CHECK(s0.sketch.empty());
    CHECK_THROWS_AS(load_sample(m.entries[0], LabelTable::canonical, true), MissingFile);
    PairedSample s1 = load_sample(m.entries[1], LabelTable::canonical, true);
    CHECK(s1.sketch.shape() == std::vector<int>{1, 32, 32});
}

TEST_CASE("scan preprocessing geometry") {
    Rng rng(21);
    PairedSample raw = scan_sample(rng, "scan");
    PairedSample net = preprocess_pair(raw);

    CHECK(net.photo.shape() == std::vector<int>{3, kNetSize, kNetSize});
    CHECK(net.sketch.shape() == std::vector<int>{1, kNetSize, kNetSize});
    CHECK(net.saliency.shape() == std::vector<int>{1, kNetSize, kNetSize});
    CHECK(net.layout.height() == kNetSize);
    CHECK(net.layout.width() == kNetSize);

    // pad columns replicate the scaled edge, and the interior is the plain
    // bilinear resize of the raw photo
    Tensor scaled = resize_bilinear(raw.photo, kNetSize, kScaledWidth);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < kNetSize; ++y) {
            for (int x = 0; x < kPadCols; ++x) {
                CHECK(net.photo.at(c, y, x) == scaled.at(c, y, 0));
                CHECK(net.photo.at(c, y, kNetSize - 1 - x) == scaled.at(c, y, kScaledWidth - 1));
            }
            for (int x = 0; x < kScaledWidth; ++x)
                CHECK(net.photo.at(c, y, x + kPadCols) == scaled.at(c, y, x));
        }
}

TEST_CASE("preprocess inversion recovers the scan frame") {
    PairedSample raw;
    raw.id = "flat";
    raw.photo = Tensor({3, kRawHeight, kRawWidth});
    raw.sketch = Tensor({1, kRawHeight, kRawWidth});
    raw.saliency = Tensor({1, kRawHeight, kRawWidth});
    raw.photo.fill(0.25);
    raw.sketch.fill(-0.5);
    raw.saliency.fill(0.75);
    raw.layout = SemanticLayout(kRawHeight, kRawWidth);
    for (int y = 0; y < kRawHeight; ++y)
        for (int x = 0; x < kRawWidth; ++x) raw.layout.at(y, x) = 7;

    PairedSample net = preprocess_pair(raw);
    Tensor back = invert_preprocess(net.sketch);
    REQUIRE(back.shape() == std::vector<int>{1, kRawHeight, kRawWidth});
    // constants pass through resampling untouched
    for (std::int64_t i = 0; i < back.numel(); ++i) CHECK(back[i] == -0.5);

    SemanticLayout lback = invert_preprocess_layout(net.layout);
    REQUIRE(lback.height() == kRawHeight);
    REQUIRE(lback.width() == kRawWidth);
    for (int y = 0; y < kRawHeight; ++y)
        for (int x = 0; x < kRawWidth; ++x) CHECK(lback.at(y, x) == 7);

    CHECK_THROWS_AS(invert_preprocess(Tensor({1, 64, 64})), BadShape);
}

TEST_CASE("smooth scans survive the preprocess round trip approximately") {
    Rng rng(5);
    // low-frequency content so the two bilinear passes lose little
    Tensor t({1, kRawHeight, kRawWidth});
    for (int y = 0; y < kRawHeight; ++y)
        for (int x = 0; x < kRawWidth; ++x)
            t.at(0, y, x) = 0.6 * std::sin(y / 37.0) * std::cos(x / 29.0);
    PairedSample raw = scan_sample(rng, "smooth");
    raw.sketch = t;

    PairedSample net = preprocess_pair(raw);
    Tensor back = invert_preprocess(net.sketch);
    double worst = 0.0;
    for (std::int64_t i = 0; i < t.numel(); ++i)
        worst = std::max(worst, std::abs(back[i] - t[i]));
    CHECK(worst < 0.01);
}

TEST_CASE("prepare_sample routes by geometry") {
    auto fx = make_fixture(3, 1, 64);
    PairedSample same = prepare_sample(fx[0]);
    CHECK(same.photo.shape() == fx[0].photo.shape());
    for (std::int64_t i = 0; i < same.photo.numel(); ++i) CHECK(same.photo[i] == fx[0].photo[i]);

    Rng rng(9);
    PairedSample scan = scan_sample(rng, "s");
    PairedSample prepped = prepare_sample(scan);
    CHECK(prepped.photo.shape() == std::vector<int>{3, kNetSize, kNetSize});

    CHECK(needs_preprocess(kRawHeight, kRawWidth));
    CHECK(!needs_preprocess(64, 64));
    CHECK(!needs_preprocess(kNetSize, kNetSize));
    CHECK(!needs_preprocess(kRawWidth, kRawHeight));

    PairedSample bad = scan;
    bad.photo = Tensor({3, 48, 48});
    bad.sketch = Tensor({1, 48, 48});
    bad.saliency = Tensor({1, 48, 48});
    bad.layout = SemanticLayout(48, 48);
    CHECK_THROWS_AS(prepare_sample(bad), BadShape);
}
