#pragma once

#include <vector>

#include "sdgan/image.hpp"
#include "sdgan/nn.hpp"

namespace sdgan::gen {

struct GeneratorConfig {
    int image_size = 256;
    int base_width = 64;   // encoder stage widths are min(base << i, max)
    int max_width = 512;
    int si_hidden = 128;
    bool use_saliency = true;
    bool use_layout = true;
    bool use_skip = false;  // encoder->decoder concatenation
    bool bilinear_upsample = false;
    double init_gain = 0.02;

    int in_channels() const { return use_saliency ? 4 : 3; }
    int stages() const;  // downsampling stages until the 2x2 bottleneck
    std::vector<int> encoder_widths() const;
};

struct SIModuleParams {
    nn::Conv shared;  // 12 -> hidden, 3x3
    nn::Conv gamma;   // hidden -> feature channels, 3x3, bias 1
    nn::Conv beta;    // hidden -> feature channels, 3x3, bias 0
};

struct SIResBlockParams {
    int in_ch = 0, out_ch = 0;
    bool use_layout = true;
    nn::Conv conv1, conv2;        // 3x3, in->out then out->out
    SIModuleParams si1, si2;
    bool has_skip = false;        // 1x1 projection when in != out
    nn::Conv skip;
    SIModuleParams si_skip;
};

SIModuleParams make_si_module(Rng& rng, int feat_channels, int hidden, double gain);
SIResBlockParams make_si_resblock(Rng& rng, int in_ch, int out_ch, int hidden, bool use_layout,
                                  double gain);

// layout drives gamma/beta; features must already be normalized
ad::Var si_modulate(const ad::Var& normfeat, const Tensor& layout_onehot,
                    const SIModuleParams& p);
ad::Var si_resblock(const ad::Var& x, const Tensor& layout_onehot, const SIResBlockParams& p);

class Generator {
public:
    Generator(const GeneratorConfig& cfg, Rng& rng);

    const GeneratorConfig& config() const { return cfg_; }
    ad::Var encode(const ad::Var& input) const;  // bottleneck features
    ad::Var generate(const ad::Var& photo, const ad::Var& saliency,
                     const data::SemanticLayout& layout) const;
    nn::ParamMap params() const;

private:
    GeneratorConfig cfg_;
    std::vector<nn::Conv> enc_;
    std::vector<SIResBlockParams> blocks_;
    nn::Conv final_;
};

}  // namespace sdgan::gen
