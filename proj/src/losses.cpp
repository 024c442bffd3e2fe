#include "sdgan/losses.hpp"

#include <cmath>
#include <map>

#include "sdgan/tensor_file.hpp"

namespace sdgan::loss {

namespace {

double he_std(int in, int k) { return std::sqrt(2.0 / (in * k * k)); }

nn::Conv conv_from(const std::map<std::string, Tensor>& m, const std::string& prefix, int in,
                   int out, int k) {
    auto wi = m.find(prefix + ".w");
    auto bi = m.find(prefix + ".b");
    if (wi == m.end() || bi == m.end())
        throw CorruptFile("oracle weights missing tensor " + prefix);
    const Tensor& w = wi->second;
    const Tensor& b = bi->second;
    if (w.ndim() != 4 || w.dim(0) != out || w.dim(1) != in || w.dim(2) != k || w.dim(3) != k)
        throw CorruptFile("oracle tensor " + prefix + ".w has shape " + w.shape_str());
    if (b.ndim() != 1 || b.dim(0) != out)
        throw CorruptFile("oracle tensor " + prefix + ".b has shape " + b.shape_str());
    nn::Conv c;
    c.w = ad::constant(w);
    c.b = ad::constant(b);
    c.stride = 1;
    c.pad = 1;
    return c;
}

ad::Var as_single_channel(const ad::Var& image) {
    const Tensor& t = image.value();
    if (t.ndim() != 3 || (t.dim(0) != 1 && t.dim(0) != 3))
        throw BadShape("expected a {1|3,h,w} image, got " + t.shape_str());
    return t.dim(0) == 1 ? image : ad::channel_mean(image);
}

}  // namespace

FeatureExtractor FeatureExtractor::make_seeded(std::uint64_t seed) {
    Rng rng(seed);
    FeatureExtractor ex;
    ex.f1_ = nn::make_frozen_conv(rng, 1, 16, 3, 1, 1, he_std(1, 3));
    ex.f2_ = nn::make_frozen_conv(rng, 16, 16, 3, 1, 1, he_std(16, 3));
    ex.f3_ = nn::make_frozen_conv(rng, 16, 32, 3, 1, 1, he_std(16, 3));
    ex.f4_ = nn::make_frozen_conv(rng, 32, 32, 3, 1, 1, he_std(32, 3));
    return ex;
}

FeatureExtractor FeatureExtractor::load(const std::string& path) {
    auto m = io::load_named_tensors(path);
    if (m.size() != 8) throw CorruptFile("feature extractor expects 8 tensors in " + path);
    FeatureExtractor ex;
    ex.f1_ = conv_from(m, "f1", 1, 16, 3);
    ex.f2_ = conv_from(m, "f2", 16, 16, 3);
    ex.f3_ = conv_from(m, "f3", 16, 32, 3);
    ex.f4_ = conv_from(m, "f4", 32, 32, 3);
    return ex;
}

void FeatureExtractor::save(const std::string& path) const {
    io::save_named_tensors(path, {{"f1.w", f1_.w.value()},
                                  {"f1.b", f1_.b.value()},
                                  {"f2.w", f2_.w.value()},
                                  {"f2.b", f2_.b.value()},
                                  {"f3.w", f3_.w.value()},
                                  {"f3.b", f3_.b.value()},
                                  {"f4.w", f4_.w.value()},
                                  {"f4.b", f4_.b.value()}});
}

// tanh keeps the map smooth everywhere, which finite-difference gradient
// checks at fixed step sizes depend on
std::pair<ad::Var, ad::Var> FeatureExtractor::features(const ad::Var& image) const {
    ad::Var x = as_single_channel(image);
    x = ad::tanh_op(nn::apply(f1_, x));
    x = ad::tanh_op(nn::apply(f2_, x));
    ad::Var level1 = ad::avgpool2(x);
    ad::Var y = ad::tanh_op(nn::apply(f3_, level1));
    y = ad::tanh_op(nn::apply(f4_, y));
    ad::Var level2 = ad::avgpool2(y);
    return {level1, level2};
}

ParsingOracle ParsingOracle::make_seeded(std::uint64_t seed) {
    Rng rng(seed);
    ParsingOracle po;
    po.p1_ = nn::make_frozen_conv(rng, 1, 16, 3, 1, 1, he_std(1, 3));
    po.p2_ = nn::make_frozen_conv(rng, 16, 12, 3, 1, 1, he_std(16, 3));
    return po;
}

ParsingOracle ParsingOracle::load(const std::string& path) {
    auto m = io::load_named_tensors(path);
    if (m.size() != 4) throw CorruptFile("parsing oracle expects 4 tensors in " + path);
    ParsingOracle po;
    po.p1_ = conv_from(m, "p1", 1, 16, 3);
    po.p2_ = conv_from(m, "p2", 16, 12, 3);
    return po;
}

void ParsingOracle::save(const std::string& path) const {
    io::save_named_tensors(path, {{"p1.w", p1_.w.value()},
                                  {"p1.b", p1_.b.value()},
                                  {"p2.w", p2_.w.value()},
                                  {"p2.b", p2_.b.value()}});
}

ad::Var ParsingOracle::probabilities(const ad::Var& sketch) const {
    ad::Var x = as_single_channel(sketch);
    x = ad::tanh_op(nn::apply(p1_, x));
    return ad::sigmoid(nn::apply(p2_, x));
}

ad::Var adversarial_d(const gen::PatchLogits& real_logits, const gen::PatchLogits& fake_logits) {
    require_same_shape(real_logits.value(), fake_logits.value(), "adversarial_d logits");
    return ad::add(ad::bce_with_logits_mean(real_logits, 1.0),
                   ad::bce_with_logits_mean(fake_logits, 0.0));
}

ad::Var adversarial_g(const gen::PatchLogits& fake_logits, bool literal_form) {
    if (literal_form) return ad::scale(ad::mean_all(ad::softplus(fake_logits)), -1.0);
    return ad::bce_with_logits_mean(fake_logits, 1.0);
}

ad::Var content_loss(const Tensor& target, const ad::Var& fake) {
    require_same_shape(target, fake.value(), "content_loss");
    return ad::mean_all(ad::abs_op(ad::sub(ad::constant(target), fake)));
}

ad::Var perceptual_loss(const Tensor& target, const ad::Var& fake, const FeatureExtractor& ex) {
    require_same_shape(target, fake.value(), "perceptual_loss");
    auto ft = ex.features(ad::constant(target));
    auto ff = ex.features(fake);
    ad::Var d1 = ad::mean_all(ad::square(ad::sub(ft.first, ff.first)));
    ad::Var d2 = ad::mean_all(ad::square(ad::sub(ft.second, ff.second)));
    return ad::add(d1, d2);
}

ad::Var bce_parsing_loss(const Tensor& target, const ad::Var& fake, const ParsingOracle& oracle) {
    require_same_shape(target, fake.value(), "bce_parsing_loss");
    Tensor q;
    {
        ad::NoGradGuard ng;
        q = oracle.probabilities(ad::constant(target)).value();
    }
    return ad::bce_probs_mean(oracle.probabilities(fake), q, 1e-7);
}

ad::Var total_generator_loss(const ad::Var& adv, const ad::Var& content, const ad::Var& ar,
                             const ad::Var& perceptual, const ad::Var& bce,
                             const LossWeights& w, LossTerms* terms) {
    struct Piece {
        const ad::Var* v;
        double weight;
        const char* name;
        double* slot;
    };
    LossTerms local;
    LossTerms& t = terms ? *terms : local;
    t = LossTerms{};
    Piece pieces[] = {{&adv, 1.0, "adversarial", &t.adv},
                      {&content, w.alpha, "content", &t.content},
                      {&ar, w.lambda, "ar", &t.ar},
                      {&perceptual, w.delta, "perceptual", &t.perceptual},
                      {&bce, w.eta, "bce", &t.bce}};
    ad::Var total;
    for (const Piece& p : pieces) {
        if (!p.v->defined()) continue;
        double raw = p.v->scalar();
        if (!std::isfinite(raw))
            throw NonFinite(std::string(p.name) + " loss is not finite");
        *p.slot = raw;
        ad::Var weighted = p.weight == 1.0 ? *p.v : ad::scale(*p.v, p.weight);
        total = total.defined() ? ad::add(total, weighted) : weighted;
    }
    if (!total.defined()) total = ad::constant(Tensor::full({1}, 0.0));
    t.total = total.scalar();
    if (!std::isfinite(t.total)) throw NonFinite("total generator loss is not finite");
    return total;
}

}  // namespace sdgan::loss
