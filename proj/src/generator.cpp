#include "sdgan/generator.hpp"

#include <algorithm>
#include <string>

namespace sdgan::gen {

int GeneratorConfig::stages() const {
    if (image_size < 8 || (image_size & (image_size - 1)) != 0)
        throw BadShape("image_size must be a power of two >= 8");
    int s = 0, v = image_size;
    while (v > 2) {
        v >>= 1;
        ++s;
    }
    return s;
}

std::vector<int> GeneratorConfig::encoder_widths() const {
    int s = stages();
    std::vector<int> w(static_cast<std::size_t>(s));
    for (int i = 0; i < s; ++i) {
        long long v = static_cast<long long>(base_width) << i;
        w[static_cast<std::size_t>(i)] = static_cast<int>(std::min<long long>(v, max_width));
    }
    return w;
}

SIModuleParams make_si_module(Rng& rng, int feat_channels, int hidden, double gain) {
    SIModuleParams p;
    p.shared = nn::make_conv(rng, data::kNumClasses, hidden, 3, 1, 1, gain, 0.0);
    p.gamma = nn::make_conv(rng, hidden, feat_channels, 3, 1, 1, gain, 1.0);
    p.beta = nn::make_conv(rng, hidden, feat_channels, 3, 1, 1, gain, 0.0);
    return p;
}

SIResBlockParams make_si_resblock(Rng& rng, int in_ch, int out_ch, int hidden, bool use_layout,
                                  double gain) {
    SIResBlockParams p;
    p.in_ch = in_ch;
    p.out_ch = out_ch;
    p.use_layout = use_layout;
    p.conv1 = nn::make_conv(rng, in_ch, out_ch, 3, 1, 1, gain, 0.0);
    p.conv2 = nn::make_conv(rng, out_ch, out_ch, 3, 1, 1, gain, 0.0);
    if (use_layout) {
        p.si1 = make_si_module(rng, in_ch, hidden, gain);
        p.si2 = make_si_module(rng, out_ch, hidden, gain);
    }
    p.has_skip = in_ch != out_ch;
    if (p.has_skip) {
        p.skip = nn::make_conv(rng, in_ch, out_ch, 1, 1, 0, gain, 0.0);
        if (use_layout) p.si_skip = make_si_module(rng, in_ch, hidden, gain);
    }
    return p;
}

ad::Var si_modulate(const ad::Var& normfeat, const Tensor& layout_onehot,
                    const SIModuleParams& p) {
    const Tensor& f = normfeat.value();
    if (layout_onehot.ndim() != 3 || layout_onehot.dim(0) != data::kNumClasses)
        throw BadShape("si_modulate: layout must be a {12,h,w} one-hot stack");
    if (layout_onehot.dim(1) != f.dim(1) || layout_onehot.dim(2) != f.dim(2))
        throw ShapeMismatch("si_modulate: layout " + layout_onehot.shape_str() +
                            " vs features " + f.shape_str());
    if (p.gamma.w.value().dim(0) != f.dim(0))
        throw ShapeMismatch("si_modulate: params modulate " +
                            std::to_string(p.gamma.w.value().dim(0)) + " channels, features have " +
                            std::to_string(f.dim(0)));
    ad::Var hidden = ad::relu(nn::apply(p.shared, ad::constant(layout_onehot)));
    ad::Var gamma = nn::apply(p.gamma, hidden);
    ad::Var beta = nn::apply(p.beta, hidden);
    return ad::add(ad::mul(normfeat, gamma), beta);
}

ad::Var si_resblock(const ad::Var& x, const Tensor& layout_onehot, const SIResBlockParams& p) {
    if (x.value().dim(0) != p.in_ch)
        throw ShapeMismatch("si_resblock: expected " + std::to_string(p.in_ch) +
                            " input channels, got " + std::to_string(x.value().dim(0)));
    ad::Var n1 = ad::instance_norm(x);
    ad::Var a1 = p.use_layout ? si_modulate(n1, layout_onehot, p.si1) : n1;
    ad::Var h1 = nn::apply(p.conv1, ad::relu(a1));
    ad::Var n2 = ad::instance_norm(h1);
    ad::Var a2 = p.use_layout ? si_modulate(n2, layout_onehot, p.si2) : n2;
    ad::Var h2 = nn::apply(p.conv2, ad::relu(a2));
    ad::Var sk = x;
    if (p.has_skip)
        sk = nn::apply(p.skip, p.use_layout ? si_modulate(n1, layout_onehot, p.si_skip) : n1);
    return ad::add(h2, sk);
}

Generator::Generator(const GeneratorConfig& cfg, Rng& rng) : cfg_(cfg) {
    int s = cfg_.stages();
    std::vector<int> w = cfg_.encoder_widths();
    int in = cfg_.in_channels();
    for (int i = 0; i < s; ++i) {
        enc_.push_back(nn::make_conv(rng, in, w[static_cast<std::size_t>(i)], 4, 2, 1,
                                     cfg_.init_gain, 0.0));
        in = w[static_cast<std::size_t>(i)];
    }
    int prev = w[static_cast<std::size_t>(s - 1)];
    for (int i = 1; i <= s; ++i) {
        int block_in = prev;
        if (cfg_.use_skip && i >= 2) block_in += w[static_cast<std::size_t>(s - i)];
        int block_out = i <= s - 1 ? w[static_cast<std::size_t>(s - 1 - i)] : w[0];
        blocks_.push_back(make_si_resblock(rng, block_in, block_out, cfg_.si_hidden,
                                           cfg_.use_layout, cfg_.init_gain));
        prev = block_out;
    }
    final_ = nn::make_conv(rng, prev, 1, 3, 1, 1, cfg_.init_gain, 0.0);
}

ad::Var Generator::encode(const ad::Var& input) const {
    const Tensor& t = input.value();
    if (t.ndim() != 3 || t.dim(0) != cfg_.in_channels() || t.dim(1) != cfg_.image_size ||
        t.dim(2) != cfg_.image_size)
        throw BadShape("encode expects {" + std::to_string(cfg_.in_channels()) + "," +
                       std::to_string(cfg_.image_size) + "," + std::to_string(cfg_.image_size) +
                       "}, got " + t.shape_str());
    ad::Var x = input;
    for (const auto& c : enc_) x = ad::leaky_relu(nn::apply(c, x), 0.2);
    return x;
}

ad::Var Generator::generate(const ad::Var& photo, const ad::Var& saliency,
                            const data::SemanticLayout& layout) const {
    int sz = cfg_.image_size;
    const Tensor& pv = photo.value();
    if (pv.ndim() != 3 || pv.dim(0) != 3 || pv.dim(1) != sz || pv.dim(2) != sz)
        throw BadShape("generate expects a {3," + std::to_string(sz) + "," +
                       std::to_string(sz) + "} photo, got " + pv.shape_str());
    ad::Var input = photo;
    if (cfg_.use_saliency) {
        const Tensor& sv = saliency.value();
        if (sv.ndim() != 3 || sv.dim(0) != 1 || sv.dim(1) != sz || sv.dim(2) != sz)
            throw ShapeMismatch("generate: saliency " + sv.shape_str() +
                                " does not match the photo");
        input = ad::concat_channels({photo, saliency});
    }
    if (cfg_.use_layout && (layout.height() != sz || layout.width() != sz))
        throw ShapeMismatch("generate: layout " + std::to_string(layout.height()) + "x" +
                            std::to_string(layout.width()) + " does not match the photo");

    int s = cfg_.stages();
    ad::Var x = input;
    std::vector<ad::Var> taps;
    taps.reserve(static_cast<std::size_t>(s));
    for (const auto& c : enc_) {
        x = ad::leaky_relu(nn::apply(c, x), 0.2);
        taps.push_back(x);
    }
    ad::Var h = taps.back();
    for (int i = 1; i <= s; ++i) {
        if (cfg_.use_skip && i >= 2)
            h = ad::concat_channels({h, taps[static_cast<std::size_t>(s - i)]});
        Tensor onehot;
        if (cfg_.use_layout)
            onehot = data::downsample_layout(layout, 1 << i, 1 << i).to_onehot();
        h = si_resblock(h, onehot, blocks_[static_cast<std::size_t>(i - 1)]);
        h = cfg_.bilinear_upsample ? ad::upsample2_bilinear(h) : ad::upsample2_nearest(h);
    }
    return ad::tanh_op(nn::apply(final_, h));
}

nn::ParamMap Generator::params() const {
    nn::ParamMap m;
    for (std::size_t i = 0; i < enc_.size(); ++i)
        m.add_conv("enc" + std::to_string(i), enc_[i]);
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        const auto& b = blocks_[i];
        std::string p = "blk" + std::to_string(i);
        m.add_conv(p + ".conv1", b.conv1);
        m.add_conv(p + ".conv2", b.conv2);
        if (b.use_layout) {
            m.add_conv(p + ".si1.shared", b.si1.shared);
            m.add_conv(p + ".si1.gamma", b.si1.gamma);
            m.add_conv(p + ".si1.beta", b.si1.beta);
            m.add_conv(p + ".si2.shared", b.si2.shared);
            m.add_conv(p + ".si2.gamma", b.si2.gamma);
            m.add_conv(p + ".si2.beta", b.si2.beta);
        }
        if (b.has_skip) {
            m.add_conv(p + ".skip", b.skip);
            if (b.use_layout) {
                m.add_conv(p + ".siskip.shared", b.si_skip.shared);
                m.add_conv(p + ".siskip.gamma", b.si_skip.gamma);
                m.add_conv(p + ".siskip.beta", b.si_skip.beta);
            }
        }
    }
    m.add_conv("final", final_);
    return m;
}

}  // namespace sdgan::gen
