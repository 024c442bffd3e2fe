#include "sdgan/nn.hpp"

namespace sdgan::nn {

namespace {
Tensor draw_weights(Rng& rng, int in, int out, int k, double wstd) {
    Tensor w({out, in, k, k});
    for (std::int64_t i = 0; i < w.numel(); ++i) w[i] = rng.normal(0.0, wstd);
    return w;
}
}  // namespace

Conv make_conv(Rng& rng, int in, int out, int k, int stride, int pad, double wstd, double bias) {
    Conv c;
    c.w = ad::parameter(draw_weights(rng, in, out, k, wstd));
    c.b = ad::parameter(Tensor::full({out}, bias));
    c.stride = stride;
    c.pad = pad;
    return c;
}

Conv make_frozen_conv(Rng& rng, int in, int out, int k, int stride, int pad, double wstd,
                      double bias) {
    Conv c;
    c.w = ad::constant(draw_weights(rng, in, out, k, wstd));
    c.b = ad::constant(Tensor::full({out}, bias));
    c.stride = stride;
    c.pad = pad;
    return c;
}

ad::Var apply(const Conv& c, const ad::Var& x) {
    return ad::conv2d(x, c.w, c.b, c.stride, c.pad);
}

}  // namespace sdgan::nn
