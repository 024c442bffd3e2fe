#include "sdgan/discriminator.hpp"

#include <string>

namespace sdgan::gen {

Discriminator::Discriminator(const DiscriminatorConfig& cfg, Rng& rng) : cfg_(cfg) {
    int b = cfg_.base_width;
    double g = cfg_.init_gain;
    c1_ = nn::make_conv(rng, cfg_.in_channels(), b, 4, 2, 1, g, 0.0);
    c2_ = nn::make_conv(rng, b, 2 * b, 4, 2, 1, g, 0.0);
    c3_ = nn::make_conv(rng, 2 * b, 4 * b, 4, 2, 1, g, 0.0);
    c4_ = nn::make_conv(rng, 4 * b, 8 * b, 4, 1, 1, g, 0.0);
    c5_ = nn::make_conv(rng, 8 * b, 1, 4, 1, 1, g, 0.0);
}

PatchLogits Discriminator::discriminate(const ad::Var& photo, const ad::Var& saliency,
                                        const ad::Var& sketch) const {
    int sz = cfg_.image_size;
    const Tensor& pv = photo.value();
    const Tensor& yv = sketch.value();
    if (pv.ndim() != 3 || pv.dim(0) != 3 || pv.dim(1) != sz || pv.dim(2) != sz)
        throw BadShape("discriminate expects a {3," + std::to_string(sz) + "," +
                       std::to_string(sz) + "} photo, got " + pv.shape_str());
    if (yv.ndim() != 3 || yv.dim(0) != 1 || yv.dim(1) != sz || yv.dim(2) != sz)
        throw ShapeMismatch("discriminate: sketch " + yv.shape_str() +
                            " does not match the photo");
    ad::Var x;
    if (cfg_.use_saliency) {
        const Tensor& sv = saliency.value();
        if (sv.ndim() != 3 || sv.dim(0) != 1 || sv.dim(1) != sz || sv.dim(2) != sz)
            throw ShapeMismatch("discriminate: saliency " + sv.shape_str() +
                                " does not match the photo");
        x = ad::concat_channels({photo, saliency, sketch});
    } else {
        x = ad::concat_channels({photo, sketch});
    }
    x = ad::leaky_relu(nn::apply(c1_, x), 0.2);
    x = ad::leaky_relu(ad::instance_norm(nn::apply(c2_, x)), 0.2);
    x = ad::leaky_relu(ad::instance_norm(nn::apply(c3_, x)), 0.2);
    x = ad::leaky_relu(ad::instance_norm(nn::apply(c4_, x)), 0.2);
    return nn::apply(c5_, x);
}

nn::ParamMap Discriminator::params() const {
    nn::ParamMap m;
    m.add_conv("c1", c1_);
    m.add_conv("c2", c2_);
    m.add_conv("c3", c3_);
    m.add_conv("c4", c4_);
    m.add_conv("c5", c5_);
    return m;
}

}  // namespace sdgan::gen
