#include "doctest.h"
#include "sdgan/autodiff.hpp"
#include "sdgan/rng.hpp"
#include "test_support.hpp"

#include <cmath>

using namespace sdgan;
using testsup::max_grad_rel_err;

namespace {

// magnitudes bounded away from 0 so kinked ops stay finite-difference friendly
Tensor random_signed(Rng& rng, std::vector<int> shape, double lo = 0.2, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (std::int64_t i = 0; i < t.numel(); ++i) {
        double mag = rng.uniform(lo, hi);
        t[i] = rng.uniform01() < 0.5 ? -mag : mag;
    }
    return t;
}

constexpr double kGradTol = 1e-3;

}  // namespace

TEST_CASE("pointwise op values") {
    ad::Var z = ad::constant(Tensor::full({3}, 0.0));
    CHECK(ad::sigmoid(z).value()[1] == 0.5);
    CHECK(ad::tanh_op(z).value()[0] == 0.0);
    CHECK(ad::softplus(z).value()[2] == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    ad::Var x = ad::constant(Tensor::full({2}, -1.5));
    CHECK(ad::relu(x).value()[0] == 0.0);
    CHECK(ad::leaky_relu(x, 0.2).value()[0] == doctest::Approx(-0.3));
    CHECK(ad::abs_op(x).value()[1] == 1.5);
    CHECK(ad::square(x).value()[0] == 2.25);
    CHECK(ad::scale(x, -2.0).value()[0] == 3.0);
    CHECK(ad::add_scalar(x, 1.0).value()[0] == -0.5);
}

TEST_CASE("reductions and arithmetic gradients") {
    Rng rng(11);
    Tensor a = random_signed(rng, {2, 3, 3});
    Tensor b = random_signed(rng, {2, 3, 3});
    ad::Var bc = ad::constant(b);

    CHECK(max_grad_rel_err(a, [](const ad::Var& x) { return ad::sum_all(x); }) < kGradTol);
    CHECK(max_grad_rel_err(a, [](const ad::Var& x) { return ad::mean_all(x); }) < kGradTol);
    CHECK(max_grad_rel_err(a, [&](const ad::Var& x) {
              return ad::sum_all(ad::mul(ad::add(x, bc), ad::sub(x, bc)));
          }) < kGradTol);
    CHECK(max_grad_rel_err(a, [](const ad::Var& x) {
              return ad::mean_all(ad::add_scalar(ad::scale(x, -1.75), 0.5));
          }) < kGradTol);
    // diamond: the same node feeding two arms must accumulate both paths
    CHECK(max_grad_rel_err(a, [](const ad::Var& x) {
              return ad::sum_all(ad::add(ad::square(x), x));
          }) < kGradTol);
}

TEST_CASE("pointwise nonlinearity gradients") {
    Rng rng(12);
    Tensor a = random_signed(rng, {1, 4, 4});
    auto through = [&](ad::Var (*op)(const ad::Var&)) {
        return max_grad_rel_err(a, [op](const ad::Var& x) { return ad::sum_all(op(x)); });
    };
    CHECK(through(&ad::relu) < kGradTol);
    CHECK(through(&ad::tanh_op) < kGradTol);
    CHECK(through(&ad::sigmoid) < kGradTol);
    CHECK(through(&ad::softplus) < kGradTol);
    CHECK(through(&ad::square) < kGradTol);
    CHECK(through(&ad::abs_op) < kGradTol);
    CHECK(max_grad_rel_err(a, [](const ad::Var& x) {
              return ad::sum_all(ad::leaky_relu(x, 0.2));
          }) < kGradTol);
}

TEST_CASE("structure op values") {
    // nearest upsample replicates 2x2 blocks
    Tensor t({1, 1, 2});
    t[0] = 3.0;
    t[1] = -5.0;
    Tensor up = ad::upsample2_nearest(ad::constant(t)).value();
    REQUIRE(up.shape() == std::vector<int>{1, 2, 4});
    CHECK(up.at(0, 0, 0) == 3.0);
    CHECK(up.at(0, 1, 1) == 3.0);
    CHECK(up.at(0, 0, 2) == -5.0);
    CHECK(up.at(0, 1, 3) == -5.0);

    // half-pixel bilinear taps: [a, .75a+.25b, .25a+.75b, b] along a 2-wide row
    Tensor bl = ad::upsample2_bilinear(ad::constant(t)).value();
    REQUIRE(bl.shape() == std::vector<int>{1, 2, 4});
    CHECK(bl.at(0, 0, 0) == doctest::Approx(3.0));
    CHECK(bl.at(0, 0, 1) == doctest::Approx(0.75 * 3.0 + 0.25 * -5.0));
    CHECK(bl.at(0, 0, 2) == doctest::Approx(0.25 * 3.0 + 0.75 * -5.0));
    CHECK(bl.at(0, 0, 3) == doctest::Approx(-5.0));
    CHECK(bl.at(0, 1, 1) == bl.at(0, 0, 1));

    Tensor q({1, 2, 2});
    q[0] = 1.0;
    q[1] = 2.0;
    q[2] = 3.0;
    q[3] = 4.0;
    Tensor pooled = ad::avgpool2(ad::constant(q)).value();
    REQUIRE(pooled.shape() == std::vector<int>{1, 1, 1});
    CHECK(pooled[0] == 2.5);

    ad::Var c = ad::concat_channels({ad::constant(q), ad::constant(Tensor::full({2, 2, 2}, 7.0))});
    REQUIRE(c.value().shape() == std::vector<int>{3, 2, 2});
    CHECK(c.value().at(0, 1, 1) == 4.0);
    CHECK(c.value().at(2, 0, 0) == 7.0);

    Tensor cm = ad::channel_mean(c).value();
    REQUIRE(cm.shape() == std::vector<int>{1, 2, 2});
    CHECK(cm.at(0, 0, 0) == doctest::Approx((1.0 + 7.0 + 7.0) / 3.0));
}

TEST_CASE("structure op gradients") {
    Rng rng(13);
    Tensor a = random_signed(rng, {2, 3, 4});
    CHECK(max_grad_rel_err(a, [](const ad::Var& x) {
              return ad::sum_all(ad::square(ad::upsample2_nearest(x)));
          }) < kGradTol);
    CHECK(max_grad_rel_err(a, [](const ad::Var& x) {
              return ad::sum_all(ad::square(ad::upsample2_bilinear(x)));
          }) < kGradTol);
    Tensor b = random_signed(rng, {2, 4, 4});
    CHECK(max_grad_rel_err(b, [](const ad::Var& x) {
              return ad::sum_all(ad::square(ad::avgpool2(x)));
          }) < kGradTol);
    Tensor other = random_signed(rng, {1, 3, 4});
    CHECK(max_grad_rel_err(a, [&](const ad::Var& x) {
              return ad::sum_all(ad::square(ad::concat_channels({x, ad::constant(other)})));
          }) < kGradTol);
    CHECK(max_grad_rel_err(a, [](const ad::Var& x) {
              return ad::sum_all(ad::square(ad::channel_mean(x)));
          }) < kGradTol);
}

TEST_CASE("conv2d forward matches a hand computation") {
    // one input channel, 3x3 identity-ish kernel picking the center
    Tensor x({1, 3, 3});
    for (std::int64_t i = 0; i < 9; ++i) x[i] = static_cast<double>(i + 1);
    Tensor w({1, 1, 3, 3});
    w.fill(0.0);
    w.at4(0, 0, 1, 1) = 1.0;
    Tensor b({1});
    b[0] = 0.25;
    Tensor y = ad::conv2d(ad::constant(x), ad::constant(w), ad::constant(b), 1, 1).value();
    REQUIRE(y.shape() == std::vector<int>{1, 3, 3});
    for (std::int64_t i = 0; i < 9; ++i) CHECK(y[i] == doctest::Approx(x[i] + 0.25));

    // stride 2, no pad: single output equals the kernel dot product
    Tensor w2({1, 1, 2, 2});
    w2.at4(0, 0, 0, 0) = 1.0;
    w2.at4(0, 0, 0, 1) = -1.0;
    w2.at4(0, 0, 1, 0) = 2.0;
    w2.at4(0, 0, 1, 1) = 0.5;
    Tensor b2({1});
    b2[0] = 0.0;
    Tensor y2 = ad::conv2d(ad::constant(x), ad::constant(w2), ad::constant(b2), 2, 0).value();
    REQUIRE(y2.shape() == std::vector<int>{1, 1, 1});
    CHECK(y2[0] == doctest::Approx(1.0 * 1 - 2.0 + 2.0 * 4 + 0.5 * 5));
}

TEST_CASE("conv2d validates its geometry") {
    ad::Var x = ad::constant(Tensor::full({2, 4, 4}, 1.0));
    ad::Var w_badc = ad::constant(Tensor::full({1, 3, 3, 3}, 0.1));
    ad::Var b1 = ad::constant(Tensor::full({1}, 0.0));
    CHECK_THROWS_AS(ad::conv2d(x, w_badc, b1), ShapeMismatch);
    ad::Var w_big = ad::constant(Tensor::full({1, 2, 5, 5}, 0.1));
    CHECK_THROWS_AS(ad::conv2d(x, w_big, b1), BadShape);
}

TEST_CASE("conv2d gradients for input, weights, and bias") {
    Rng rng(14);
    Tensor x = random_signed(rng, {2, 5, 5});
    Tensor w = random_signed(rng, {3, 2, 3, 3});
    Tensor b = random_signed(rng, {3});
    for (auto [stride, pad] : {std::pair{1, 1}, std::pair{2, 0}, std::pair{2, 1}}) {
        CHECK(max_grad_rel_err(x, [&, stride, pad](const ad::Var& v) {
                  return ad::mean_all(
                      ad::square(ad::conv2d(v, ad::constant(w), ad::constant(b), stride, pad)));
              }) < kGradTol);
        CHECK(max_grad_rel_err(w, [&, stride, pad](const ad::Var& v) {
                  return ad::mean_all(
                      ad::square(ad::conv2d(ad::constant(x), v, ad::constant(b), stride, pad)));
              }) < kGradTol);
        CHECK(max_grad_rel_err(b, [&, stride, pad](const ad::Var& v) {
                  return ad::mean_all(
                      ad::square(ad::conv2d(ad::constant(x), ad::constant(w), v, stride, pad)));
              }) < kGradTol);
    }
}

TEST_CASE("instance norm normalizes per channel and backpropagates") {
    Rng rng(15);
    Tensor x = random_signed(rng, {3, 4, 4});
    Tensor y = ad::instance_norm(ad::constant(x)).value();
    for (int c = 0; c < 3; ++c) {
        double m = 0.0, v = 0.0;
        for (int i = 0; i < 16; ++i) m += y[c * 16 + i];
        m /= 16.0;
        for (int i = 0; i < 16; ++i) {
            double d = y[c * 16 + i] - m;
            v += d * d;
        }
        v /= 16.0;
        CHECK(std::abs(m) < 1e-12);
        CHECK(v == doctest::Approx(1.0).epsilon(1e-3));  // eps shrinks it slightly
    }
    CHECK(max_grad_rel_err(x, [](const ad::Var& v) {
              return ad::sum_all(ad::mul(ad::instance_norm(v),
                                         ad::constant(Tensor::full({3, 4, 4}, 0.5))));
          }) < kGradTol);
    // constant channels have zero deviation everywhere
    Tensor flat = ad::instance_norm(ad::constant(Tensor::full({2, 3, 3}, 4.0))).value();
    for (std::int64_t i = 0; i < flat.numel(); ++i) CHECK(flat[i] == 0.0);
}

TEST_CASE("bce losses: closed forms and gradients") {
    ad::Var zeros = ad::constant(Tensor::full({1, 2, 2}, 0.0));
    CHECK(ad::bce_with_logits_mean(zeros, 1.0).scalar() ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(ad::bce_with_logits_mean(zeros, 0.0).scalar() ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    // saturated logits stay finite through the stable form
    ad::Var big = ad::constant(Tensor::full({2}, 500.0));
    CHECK(std::isfinite(ad::bce_with_logits_mean(big, 0.0).scalar()));
    CHECK(ad::bce_with_logits_mean(big, 1.0).scalar() == doctest::Approx(0.0));

    Rng rng(16);
    Tensor z = random_signed(rng, {1, 3, 3}, 0.2, 2.0);
    CHECK(max_grad_rel_err(z, [](const ad::Var& v) {
              return ad::bce_with_logits_mean(v, 1.0);
          }) < kGradTol);
    CHECK(max_grad_rel_err(z, [](const ad::Var& v) {
              return ad::bce_with_logits_mean(v, 0.0);
          }) < kGradTol);

    Tensor q({2, 2, 2});
    for (std::int64_t i = 0; i < 8; ++i) q[i] = 0.1 + 0.1 * static_cast<double>(i);
    Tensor p0 = Tensor::full({2, 2, 2}, 0.5);
    CHECK(ad::bce_probs_mean(ad::constant(p0), p0).scalar() ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    // clamping keeps exact 0/1 probabilities finite
    Tensor sat({2});
    sat[0] = 0.0;
    sat[1] = 1.0;
    CHECK(std::isfinite(ad::bce_probs_mean(ad::constant(sat), sat).scalar()));

    Tensor p = Tensor({2, 2, 2});
    for (std::int64_t i = 0; i < 8; ++i) p[i] = 0.2 + 0.07 * static_cast<double>(i);
    CHECK(max_grad_rel_err(p, [&](const ad::Var& v) {
              return ad::bce_probs_mean(v, q);
          }) < kGradTol);
}

TEST_CASE("recording can be suspended") {
    CHECK(ad::grad_enabled());
    Tensor x0 = Tensor::full({2}, 1.5);
    ad::Var x = ad::parameter(x0);
    {
        ad::NoGradGuard ng;
        CHECK_FALSE(ad::grad_enabled());
        ad::Var y = ad::mul(x, x);
        CHECK(y.node->parents.empty());
        CHECK_FALSE(y.requires_grad());
    }
    CHECK(ad::grad_enabled());

    // with recording back on the same expression carries a graph
    ad::Var y = ad::sum_all(ad::mul(x, x));
    CHECK(y.requires_grad());
    CHECK_THROWS_AS(ad::backward(ad::mul(x, x)), BadShape);  // non-scalar loss
    ad::backward(y);
    REQUIRE_FALSE(x.grad().empty());
    CHECK(x.grad()[0] == doctest::Approx(3.0));  // d sum(x*x)/dx = 2x

    ad::Var xz = x;
    ad::zero_grad(xz);
    CHECK(x.grad()[0] == 0.0);
}

TEST_CASE("constants do not accumulate gradients") {
    ad::Var c = ad::constant(Tensor::full({2}, 2.0));
    ad::Var p = ad::parameter(Tensor::full({2}, 3.0));
    ad::Var y = ad::sum_all(ad::mul(c, p));
    ad::backward(y);
    CHECK(c.grad().empty());
    REQUIRE_FALSE(p.grad().empty());
    CHECK(p.grad()[0] == doctest::Approx(2.0));
    CHECK(p.grad()[1] == doctest::Approx(2.0));
}
