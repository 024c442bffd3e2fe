#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "sdgan/discriminator.hpp"
#include "sdgan/nn.hpp"

namespace sdgan::loss {

struct LossWeights {
    double alpha = 100.0;   // content
    double lambda = 100.0;  // adaptive re-weighting
    double delta = 1.0;     // perceptual
    double eta = 10.0;      // parsing BCE
};

// Frozen two-level feature pyramid for the perceptual distance. Weights are
// either drawn once from a seed or loaded from a tensor container; they are
// constants, so gradients flow through the features but never into them.
class FeatureExtractor {
public:
    static FeatureExtractor make_seeded(std::uint64_t seed);
    static FeatureExtractor load(const std::string& path);
    void save(const std::string& path) const;
    // half and quarter resolution feature stacks for a {1|3,h,w} image
    std::pair<ad::Var, ad::Var> features(const ad::Var& image) const;

private:
    nn::Conv f1_, f2_, f3_, f4_;
};

// Frozen per-class sigmoid parser: sketch {1,h,w} -> probabilities {12,h,w}.
// Channels are independent and need not sum to 1.
class ParsingOracle {
public:
    static ParsingOracle make_seeded(std::uint64_t seed);
    static ParsingOracle load(const std::string& path);
    void save(const std::string& path) const;
    ad::Var probabilities(const ad::Var& sketch) const;

private:
    nn::Conv p1_, p2_;
};

ad::Var adversarial_d(const gen::PatchLogits& real_logits, const gen::PatchLogits& fake_logits);
// non-saturating by default: cross-entropy of fake logits toward the real
// label; literal_form switches to mean log(1 - sigmoid(z))
ad::Var adversarial_g(const gen::PatchLogits& fake_logits, bool literal_form = false);
ad::Var content_loss(const Tensor& target, const ad::Var& fake);
ad::Var perceptual_loss(const Tensor& target, const ad::Var& fake, const FeatureExtractor& ex);
ad::Var bce_parsing_loss(const Tensor& target, const ad::Var& fake, const ParsingOracle& oracle);

struct LossTerms {
    double adv = 0.0;
    double content = 0.0;
    double ar = 0.0;
    double perceptual = 0.0;
    double bce = 0.0;
    double total = 0.0;
};

// L = adv + alpha*content + lambda*ar + delta*perceptual + eta*bce.
// Undefined component Vars are treated as disabled and reported as 0.
ad::Var total_generator_loss(const ad::Var& adv, const ad::Var& content, const ad::Var& ar,
                             const ad::Var& perceptual, const ad::Var& bce,
                             const LossWeights& w, LossTerms* terms = nullptr);

}  // namespace sdgan::loss
