#pragma once

#include "sdgan/nn.hpp"

namespace sdgan::gen {

// Raw real/fake scores on a grid of overlapping patches, {1,ph,pw}. No sigmoid
// is applied here; the loss side uses the stable logits form.
using PatchLogits = ad::Var;

struct DiscriminatorConfig {
    int image_size = 256;
    int base_width = 64;
    bool use_saliency = true;
    double init_gain = 0.02;
    int in_channels() const { return use_saliency ? 5 : 4; }
};

// 70x70 patch discriminator over the (photo, saliency, sketch) stack:
// three stride-2 4x4 convs then two stride-1 4x4 convs, widths
// base/2base/4base/8base/1. 256x256 inputs land on a 30x30 logit grid.
class Discriminator {
public:
    Discriminator(const DiscriminatorConfig& cfg, Rng& rng);
    const DiscriminatorConfig& config() const { return cfg_; }
    PatchLogits discriminate(const ad::Var& photo, const ad::Var& saliency,
                             const ad::Var& sketch) const;
    nn::ParamMap params() const;

private:
    DiscriminatorConfig cfg_;
    nn::Conv c1_, c2_, c3_, c4_, c5_;
};

}  // namespace sdgan::gen
