#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sdgan/autodiff.hpp"
#include "sdgan/rng.hpp"

namespace sdgan::nn {

struct Conv {
    ad::Var w;  // {out,in,k,k}
    ad::Var b;  // {out}
    int stride = 1;
    int pad = 0;
};

// trainable conv, weights N(0, wstd), bias constant
Conv make_conv(Rng& rng, int in, int out, int k, int stride, int pad, double wstd,
               double bias = 0.0);
// frozen conv for fixed oracles: same draw order, constants instead of parameters
Conv make_frozen_conv(Rng& rng, int in, int out, int k, int stride, int pad, double wstd,
                      double bias = 0.0);

ad::Var apply(const Conv& c, const ad::Var& x);

// named parameter list in registration order; names drive checkpoints
struct ParamMap {
    std::vector<std::pair<std::string, ad::Var>> items;
    void add(const std::string& name, const ad::Var& v) { items.emplace_back(name, v); }
    void add_conv(const std::string& prefix, const Conv& c) {
        add(prefix + ".w", c.w);
        add(prefix + ".b", c.b);
    }
};

}  // namespace sdgan::nn
