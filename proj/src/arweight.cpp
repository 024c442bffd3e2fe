#include "sdgan/arweight.hpp"

#include <cmath>
#include <memory>

namespace sdgan::ar {

using data::kNumClasses;
using data::SemanticLayout;

namespace {

void require_layout_match(const Tensor& sketch, const SemanticLayout& layout,
                          const char* what) {
    if (sketch.ndim() != 3)
        throw BadShape(std::string(what) + ": sketch must be {c,h,w}");
    if (sketch.dim(1) != layout.height() || sketch.dim(2) != layout.width())
        throw ShapeMismatch(std::string(what) + ": sketch " + sketch.shape_str() +
                            " vs layout " + std::to_string(layout.height()) + "x" +
                            std::to_string(layout.width()));
}

}  // namespace

Tensor to_single_channel(const Tensor& t) {
    if (t.ndim() != 3) throw BadShape("expected {c,h,w}");
    if (t.dim(0) == 1) return t;
    int c = t.dim(0);
    std::int64_t hw = static_cast<std::int64_t>(t.dim(1)) * t.dim(2);
    Tensor out({1, t.dim(1), t.dim(2)});
    for (std::int64_t p = 0; p < hw; ++p) {
        double s = 0.0;
        for (int k = 0; k < c; ++k) s += t[k * hw + p];
        out[p] = s / c;
    }
    return out;
}

std::array<double, kNumClasses> class_mean(const Tensor& sketch,
                                           const SemanticLayout& layout) {
    require_layout_match(sketch, layout, "class_mean");
    Tensor f = to_single_channel(sketch);
    std::array<double, kNumClasses> mu{};
    std::array<std::int64_t, kNumClasses> n{};
    std::int64_t hw = f.numel();
    const auto& idx = layout.indices();
    for (std::int64_t p = 0; p < hw; ++p) {
        mu[idx[static_cast<std::size_t>(p)]] += f[p];
        ++n[idx[static_cast<std::size_t>(p)]];
    }
    for (int c = 0; c < kNumClasses; ++c) mu[c] = n[c] > 0 ? mu[c] / n[c] : 0.0;
    return mu;
}

std::array<double, kNumClasses> class_variance(const Tensor& sketch,
                                               const SemanticLayout& layout,
                                               const std::array<double, kNumClasses>& mu,
                                               VarianceForm form) {
    require_layout_match(sketch, layout, "class_variance");
    Tensor f = to_single_channel(sketch);
    std::array<double, kNumClasses> nu{};
    std::array<std::int64_t, kNumClasses> n{};
    std::int64_t hw = f.numel();
    const auto& idx = layout.indices();
    for (std::int64_t p = 0; p < hw; ++p) ++n[idx[static_cast<std::size_t>(p)]];
    if (form == VarianceForm::intra) {
        for (std::int64_t p = 0; p < hw; ++p) {
            int c = idx[static_cast<std::size_t>(p)];
            double d = f[p] - mu[c];
            nu[c] += d * d;
        }
    } else {
        // literal masked form: the sum runs over every pixel, so each pixel
        // outside the class contributes mu(c)^2
        for (int c = 0; c < kNumClasses; ++c) {
            if (n[c] == 0) continue;
            double acc = 0.0;
            for (std::int64_t p = 0; p < hw; ++p) {
                double masked = idx[static_cast<std::size_t>(p)] == c ? f[p] : 0.0;
                double d = masked - mu[c];
                acc += d * d;
            }
            nu[c] = acc;
        }
    }
    for (int c = 0; c < kNumClasses; ++c) nu[c] = n[c] > 0 ? nu[c] / n[c] : 0.0;
    return nu;
}

ClassStats compute_stats(const Tensor& sketch, const SemanticLayout& layout,
                         VarianceForm form) {
    ClassStats s;
    s.mu = class_mean(sketch, layout);
    s.nu = class_variance(sketch, layout, s.mu, form);
    const auto& idx = layout.indices();
    for (std::uint8_t c : idx) ++s.counts[c];
    return s;
}

ARMapStack build_ar_maps(const ClassStats& stats, const SemanticLayout& layout) {
    if (layout.empty()) throw BadShape("build_ar_maps: empty layout");
    int h = layout.height(), w = layout.width();
    ARMapStack m{Tensor({kNumClasses, h, w}), Tensor({kNumClasses, h, w})};
    std::int64_t hw = static_cast<std::int64_t>(h) * w;
    const auto& idx = layout.indices();
    for (std::int64_t p = 0; p < hw; ++p) {
        int c = idx[static_cast<std::size_t>(p)];
        m.bmu[c * hw + p] = stats.mu[c];
        m.bnu[c * hw + p] = stats.nu[c];
    }
    return m;
}

AffinityVector affinity(const Tensor& sketch, const ARMapStack& maps) {
    Tensor f = to_single_channel(sketch);
    if (maps.bmu.ndim() != 3 || maps.bmu.dim(0) != kNumClasses ||
        !maps.bmu.same_shape(maps.bnu))
        throw BadShape("affinity: malformed AR maps");
    if (maps.bmu.dim(1) != f.dim(1) || maps.bmu.dim(2) != f.dim(2))
        throw ShapeMismatch("affinity: sketch " + f.shape_str() + " vs maps " +
                            maps.bmu.shape_str());
    std::int64_t hw = f.numel();
    double f2 = 0.0;
    for (std::int64_t p = 0; p < hw; ++p) f2 += f[p] * f[p];
    double nf = std::sqrt(f2);
    AffinityVector out;
    for (int r = 0; r < 2; ++r) {
        const Tensor& b = r == 0 ? maps.bmu : maps.bnu;
        for (int c = 0; c < kNumClasses; ++c) {
            double dot = 0.0, b2 = 0.0;
            const double* pb = b.data() + c * hw;
            for (std::int64_t p = 0; p < hw; ++p) {
                dot += f[p] * pb[p];
                b2 += pb[p] * pb[p];
            }
            double nb = std::sqrt(b2);
            out.c[r][c] = (nf == 0.0 || nb == 0.0) ? 0.0 : dot / (nf * nb + kCosineEps);
        }
    }
    return out;
}

double ar_loss(const Tensor& target, const Tensor& fake, const SemanticLayout& layout,
               VarianceForm form) {
    require_layout_match(target, layout, "ar_loss target");
    require_layout_match(fake, layout, "ar_loss fake");
    auto one = [&](const Tensor& t) {
        ClassStats s = compute_stats(t, layout, form);
        return affinity(t, build_ar_maps(s, layout));
    };
    AffinityVector at = one(target), af = one(fake);
    double loss = 0.0;
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < kNumClasses; ++c) {
            double d = at.c[r][c] - af.c[r][c];
            loss += d * d;
        }
    return loss;
}

// ---- differentiable path ----

namespace {

using IdxPtr = std::shared_ptr<const std::vector<std::uint8_t>>;

ad::Var masked_sums(const ad::Var& f, const IdxPtr& idx) {
    Tensor out({kNumClasses});
    const Tensor& fv = f.value();
    for (std::int64_t p = 0; p < fv.numel(); ++p)
        out[(*idx)[static_cast<std::size_t>(p)]] += fv[p];
    return ad::make_op(std::move(out), {f}, [idx](ad::Node& n) {
        Tensor& g = ad::ensure_grad(*n.parents[0]);
        for (std::int64_t p = 0; p < g.numel(); ++p)
            g[p] += n.grad[(*idx)[static_cast<std::size_t>(p)]];
    });
}

ad::Var broadcast_classes(const ad::Var& vec, const IdxPtr& idx, int h, int w) {
    Tensor out({1, h, w});
    const Tensor& v = vec.value();
    for (std::int64_t p = 0; p < out.numel(); ++p)
        out[p] = v[(*idx)[static_cast<std::size_t>(p)]];
    return ad::make_op(std::move(out), {vec}, [idx](ad::Node& n) {
        Tensor& g = ad::ensure_grad(*n.parents[0]);
        for (std::int64_t p = 0; p < n.grad.numel(); ++p)
            g[(*idx)[static_cast<std::size_t>(p)]] += n.grad[p];
    });
}

// guarded cosine between the sketch and each broadcast statistic channel:
// C(c) = stat_c * d_c / (||F|| * |stat_c| * sqrt(n_c) + eps), 0 when a norm is 0
ad::Var cos_vec(const ad::Var& f, const ad::Var& stat, const IdxPtr& idx,
                const std::array<std::int64_t, kNumClasses>& counts) {
    const Tensor& fv = f.value();
    const Tensor& sv = stat.value();
    std::array<double, kNumClasses> d{};
    double f2 = 0.0;
    for (std::int64_t p = 0; p < fv.numel(); ++p) {
        d[(*idx)[static_cast<std::size_t>(p)]] += fv[p];
        f2 += fv[p] * fv[p];
    }
    double nf = std::sqrt(f2);
    Tensor out({kNumClasses});
    for (int c = 0; c < kNumClasses; ++c) {
        double k = std::abs(sv[c]) * std::sqrt(static_cast<double>(counts[c]));
        out[c] = (nf == 0.0 || k == 0.0) ? 0.0 : sv[c] * d[c] / (nf * k + kCosineEps);
    }
    return ad::make_op(std::move(out), {f, stat}, [idx, counts, d, nf](ad::Node& n) {
        const Tensor& fv = n.parents[0]->value;
        const Tensor& sv = n.parents[1]->value;
        std::array<double, kNumClasses> in_class{};
        double along_f = 0.0;
        bool f_grad = n.parents[0]->requires_grad;
        for (int c = 0; c < kNumClasses; ++c) {
            double k = std::abs(sv[c]) * std::sqrt(static_cast<double>(counts[c]));
            if (nf == 0.0 || k == 0.0) continue;
            double denom = nf * k + kCosineEps;
            double gc = n.grad[c];
            if (n.parents[1]->requires_grad)
                ad::ensure_grad(*n.parents[1])[c] += gc * d[c] * kCosineEps / (denom * denom);
            if (f_grad) {
                in_class[c] = gc * sv[c] / denom;
                along_f += gc * (-sv[c] * d[c] * k / (denom * denom)) / nf;
            }
        }
        if (f_grad) {
            Tensor& g = ad::ensure_grad(*n.parents[0]);
            for (std::int64_t p = 0; p < g.numel(); ++p)
                g[p] += in_class[(*idx)[static_cast<std::size_t>(p)]] + along_f * fv[p];
        }
    });
}

}  // namespace

ad::Var ar_loss_var(const Tensor& target, const ad::Var& fake, const SemanticLayout& layout,
                    VarianceForm form) {
    require_layout_match(target, layout, "ar_loss target");
    require_layout_match(fake.value(), layout, "ar_loss fake");

    AffinityVector at;
    {
        ad::NoGradGuard ng;
        ClassStats st = compute_stats(target, layout, form);
        at = affinity(target, build_ar_maps(st, layout));
    }

    int h = layout.height(), w = layout.width();
    std::int64_t hw = static_cast<std::int64_t>(h) * w;
    auto idx = std::make_shared<const std::vector<std::uint8_t>>(layout.indices());
    std::array<std::int64_t, kNumClasses> counts{};
    for (std::uint8_t c : *idx) ++counts[c];

    Tensor inv({kNumClasses}), extra({kNumClasses});
    for (int c = 0; c < kNumClasses; ++c) {
        inv[c] = counts[c] > 0 ? 1.0 / counts[c] : 0.0;
        extra[c] = static_cast<double>(hw - counts[c]);
    }

    ad::Var f = fake.value().dim(0) == 1 ? fake : ad::channel_mean(fake);
    ad::Var d = masked_sums(f, idx);
    ad::Var mu = ad::mul(d, ad::constant(inv));
    ad::Var dev = ad::sub(f, broadcast_classes(mu, idx, h, w));
    ad::Var sq_sums = masked_sums(ad::square(dev), idx);
    ad::Var nu;
    if (form == VarianceForm::intra) {
        nu = ad::mul(sq_sums, ad::constant(inv));
    } else {
        ad::Var outside = ad::mul(ad::square(mu), ad::constant(extra));
        nu = ad::mul(ad::add(sq_sums, outside), ad::constant(inv));
    }

    ad::Var c1 = cos_vec(f, mu, idx, counts);
    ad::Var c2 = cos_vec(f, nu, idx, counts);

    Tensor t1({kNumClasses}), t2({kNumClasses});
    for (int c = 0; c < kNumClasses; ++c) {
        t1[c] = at.c[0][c];
        t2[c] = at.c[1][c];
    }
    return ad::add(ad::sum_all(ad::square(ad::sub(c1, ad::constant(t1)))),
                   ad::sum_all(ad::square(ad::sub(c2, ad::constant(t2)))));
}

}  // namespace sdgan::ar
