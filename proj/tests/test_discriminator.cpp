#include "doctest.h"
#include "sdgan/discriminator.hpp"
#include "sdgan/rng.hpp"
#include "test_support.hpp"

#include <cmath>
#include <set>
#include <string>
#include <vector>

using namespace sdgan;
using namespace sdgan::gen;

namespace {

DiscriminatorConfig narrow64() {
    DiscriminatorConfig cfg;
    cfg.image_size = 64;
    cfg.base_width = 8;
    return cfg;
}

Tensor filled(const std::vector<int>& shape, std::uint64_t seed) {
    Rng rng(seed);
    Tensor t(shape);
    for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-1.0, 1.0);
    return t;
}

}  // namespace

TEST_CASE("patch grid shrinks with three halvings and two valid-ish taps") {
    Rng rng(7);
    Discriminator d(narrow64(), rng);
    Tensor photo = filled({3, 64, 64}, 1);
    Tensor sal = filled({1, 64, 64}, 2);
    Tensor sketch = filled({1, 64, 64}, 3);
    ad::NoGradGuard ng;
    ad::Var y = d.discriminate(ad::constant(photo), ad::constant(sal), ad::constant(sketch));
    // 64 -> 32 -> 16 -> 8 -> 7 -> 6
    CHECK(y.value().shape() == std::vector<int>{1, 6, 6});
}

TEST_CASE("same seed, same judgment") {
    Rng r1(11), r2(11);
    Discriminator a(narrow64(), r1), b(narrow64(), r2);
    Tensor photo = filled({3, 64, 64}, 5);
    Tensor sal = filled({1, 64, 64}, 6);
    Tensor sketch = filled({1, 64, 64}, 7);
    ad::NoGradGuard ng;
    ad::Var ya = a.discriminate(ad::constant(photo), ad::constant(sal), ad::constant(sketch));
    ad::Var yb = b.discriminate(ad::constant(photo), ad::constant(sal), ad::constant(sketch));
    for (std::int64_t i = 0; i < ya.value().numel(); ++i)
        CHECK(ya.value()[i] == yb.value()[i]);
}

TEST_CASE("logits respond to every conditioning input") {
    Rng rng(13);
    Discriminator d(narrow64(), rng);
    Tensor photo = filled({3, 64, 64}, 21);
    Tensor sal = filled({1, 64, 64}, 22);
    Tensor sketch = filled({1, 64, 64}, 23);
    ad::NoGradGuard ng;
    ad::Var base = d.discriminate(ad::constant(photo), ad::constant(sal), ad::constant(sketch));

    auto differs = [&](const ad::Var& other) {
        for (std::int64_t i = 0; i < base.value().numel(); ++i)
            if (base.value()[i] != other.value()[i]) return true;
        return false;
    };
    CHECK(differs(
        d.discriminate(ad::constant(filled({3, 64, 64}, 31)), ad::constant(sal),
                       ad::constant(sketch))));
    CHECK(differs(
        d.discriminate(ad::constant(photo), ad::constant(filled({1, 64, 64}, 32)),
                       ad::constant(sketch))));
    CHECK(differs(
        d.discriminate(ad::constant(photo), ad::constant(sal),
                       ad::constant(filled({1, 64, 64}, 33)))));
}

TEST_CASE("gradients reach photo, saliency and sketch") {
    Rng rng(17);
    Discriminator d(narrow64(), rng);
    ad::Var photo = ad::parameter(filled({3, 64, 64}, 41));
    ad::Var sal = ad::parameter(filled({1, 64, 64}, 42));
    ad::Var sketch = ad::parameter(filled({1, 64, 64}, 43));
    ad::Var loss = ad::mean_all(d.discriminate(photo, sal, sketch));
    ad::backward(loss);

    auto has_signal = [](const ad::Var& v) {
        const Tensor& g = v.grad();
        if (g.empty()) return false;
        for (std::int64_t i = 0; i < g.numel(); ++i)
            if (g[i] != 0.0) return true;
        return false;
    };
    CHECK(has_signal(photo));
    CHECK(has_signal(sal));
    CHECK(has_signal(sketch));
}

TEST_CASE("saliency channel can be compiled out") {
    DiscriminatorConfig cfg = narrow64();
    cfg.use_saliency = false;
    CHECK(cfg.in_channels() == 4);
    Rng rng(19);
    Discriminator d(cfg, rng);
    Tensor photo = filled({3, 64, 64}, 51);
    Tensor sketch = filled({1, 64, 64}, 52);
    ad::NoGradGuard ng;
    ad::Var y = d.discriminate(ad::constant(photo), ad::Var(), ad::constant(sketch));
    CHECK(y.value().shape() == std::vector<int>{1, 6, 6});
}

TEST_CASE("conditioning shape errors are loud") {
    Rng rng(23);
    Discriminator d(narrow64(), rng);
    Tensor photo = filled({3, 64, 64}, 61);
    Tensor sal = filled({1, 64, 64}, 62);
    Tensor sketch = filled({1, 64, 64}, 63);
    ad::NoGradGuard ng;

    CHECK_THROWS_AS(d.discriminate(ad::constant(filled({3, 32, 32}, 1)), ad::constant(sal),
                                   ad::constant(sketch)),
                    BadShape);
    CHECK_THROWS_AS(d.discriminate(ad::constant(photo), ad::constant(sal),
                                   ad::constant(filled({3, 64, 64}, 1))),
                    ShapeMismatch);
    CHECK_THROWS_AS(d.discriminate(ad::constant(photo), ad::constant(filled({1, 32, 32}, 1)),
                                   ad::constant(sketch)),
                    ShapeMismatch);
}

TEST_CASE("parameters enumerate the five conv layers") {
    Rng rng(29);
    Discriminator d(narrow64(), rng);
    auto pm = d.params();
    std::set<std::string> names;
    for (const auto& [name, v] : pm.items) {
        CHECK(names.insert(name).second);
        CHECK(v.requires_grad());
    }
    CHECK(pm.items.size() == 10);
    for (const char* n : {"c1.w", "c1.b", "c2.w", "c3.w", "c4.w", "c5.w", "c5.b"})
        CHECK(names.count(n));
}
