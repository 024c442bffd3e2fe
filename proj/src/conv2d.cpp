#include "sdgan/autodiff.hpp"

#include <algorithm>

#include <Eigen/Dense>

namespace sdgan::ad {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

constexpr std::int64_t kColBudgetBytes = 32ll << 20;

struct ConvGeom {
    int ci, h, w;
    int co, kh, kw;
    int stride, pad;
    int oh, ow;
    std::int64_t k_rows;   // ci*kh*kw
    std::int64_t n_cols;   // oh*ow
};

ConvGeom make_geom(const Tensor& x, const Tensor& wt, int stride, int pad) {
    if (x.ndim() != 3) throw BadShape("conv2d: input must be {c,h,w}");
    if (wt.ndim() != 4) throw BadShape("conv2d: weight must be {co,ci,kh,kw}");
    ConvGeom g;
    g.ci = x.dim(0);
    g.h = x.dim(1);
    g.w = x.dim(2);
    g.co = wt.dim(0);
    g.kh = wt.dim(2);
    g.kw = wt.dim(3);
    g.stride = stride;
    g.pad = pad;
    if (wt.dim(1) != g.ci)
        throw ShapeMismatch("conv2d: weight expects " + std::to_string(wt.dim(1)) +
                            " input channels, got " + std::to_string(g.ci));
    g.oh = (g.h + 2 * pad - g.kh) / stride + 1;
    g.ow = (g.w + 2 * pad - g.kw) / stride + 1;
    if (g.oh < 1 || g.ow < 1) throw BadShape("conv2d: output would be empty");
    g.k_rows = static_cast<std::int64_t>(g.ci) * g.kh * g.kw;
    g.n_cols = static_cast<std::int64_t>(g.oh) * g.ow;
    return g;
}

std::int64_t chunk_cols(const ConvGeom& g) {
    std::int64_t c = kColBudgetBytes / (g.k_rows * 8);
    if (c < 1) c = 1;
    if (c > g.n_cols) c = g.n_cols;
    return c;
}

// fill a K x n column block of the unrolled input, columns [j0, j0+n)
void im2col_block(const Tensor& x, const ConvGeom& g, std::int64_t j0, std::int64_t n,
                  double* buf) {
    for (int c = 0; c < g.ci; ++c)
        for (int ky = 0; ky < g.kh; ++ky)
            for (int kx = 0; kx < g.kw; ++kx) {
                std::int64_t r = (static_cast<std::int64_t>(c) * g.kh + ky) * g.kw + kx;
                double* row = buf + r * n;
                for (std::int64_t j = 0; j < n; ++j) {
                    std::int64_t jj = j0 + j;
                    int oy = static_cast<int>(jj / g.ow);
                    int ox = static_cast<int>(jj % g.ow);
                    int iy = oy * g.stride - g.pad + ky;
                    int ix = ox * g.stride - g.pad + kx;
                    row[j] = (iy >= 0 && iy < g.h && ix >= 0 && ix < g.w) ? x.at(c, iy, ix) : 0.0;
                }
            }
}

// scatter-add a K x n column block back onto the input gradient
void col2im_block(const double* buf, const ConvGeom& g, std::int64_t j0, std::int64_t n,
                  Tensor& gx) {
    for (int c = 0; c < g.ci; ++c)
        for (int ky = 0; ky < g.kh; ++ky)
            for (int kx = 0; kx < g.kw; ++kx) {
                std::int64_t r = (static_cast<std::int64_t>(c) * g.kh + ky) * g.kw + kx;
                const double* row = buf + r * n;
                for (std::int64_t j = 0; j < n; ++j) {
                    std::int64_t jj = j0 + j;
                    int oy = static_cast<int>(jj / g.ow);
                    int ox = static_cast<int>(jj % g.ow);
                    int iy = oy * g.stride - g.pad + ky;
                    int ix = ox * g.stride - g.pad + kx;
                    if (iy >= 0 && iy < g.h && ix >= 0 && ix < g.w) gx.at(c, iy, ix) += row[j];
                }
            }
}

}  // namespace

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
    if (stride < 1 || pad < 0) throw BadShape("conv2d: bad stride or pad");
    ConvGeom g = make_geom(x.value(), w.value(), stride, pad);
    if (b.value().ndim() != 1 || b.value().dim(0) != g.co)
        throw ShapeMismatch("conv2d: bias must be {co}");

    Tensor out({g.co, g.oh, g.ow});
    std::int64_t step = chunk_cols(g);
    std::vector<double> colbuf(static_cast<std::size_t>(g.k_rows * step));
    ConstMapMat wm(w.value().data(), g.co, g.k_rows);
    MapMat om(out.data(), g.co, g.n_cols);
    for (std::int64_t j0 = 0; j0 < g.n_cols; j0 += step) {
        std::int64_t n = std::min(step, g.n_cols - j0);
        im2col_block(x.value(), g, j0, n, colbuf.data());
        ConstMapMat cm(colbuf.data(), g.k_rows, n);
        om.block(0, j0, g.co, n).noalias() = wm * cm;
    }
    for (int o = 0; o < g.co; ++o) {
        double bo = b.value()[o];
        double* row = out.data() + static_cast<std::int64_t>(o) * g.n_cols;
        for (std::int64_t j = 0; j < g.n_cols; ++j) row[j] += bo;
    }

    return make_op(std::move(out), {x, w, b}, [g](Node& n) {
        Node& xn = *n.parents[0];
        Node& wn = *n.parents[1];
        Node& bn = *n.parents[2];
        std::int64_t step = chunk_cols(g);
        std::vector<double> colbuf(static_cast<std::size_t>(g.k_rows * step));
        std::vector<double> gcolbuf;
        if (xn.requires_grad) gcolbuf.resize(static_cast<std::size_t>(g.k_rows * step));
        ConstMapMat gm(n.grad.data(), g.co, g.n_cols);
        ConstMapMat wm(wn.value.data(), g.co, g.k_rows);
        for (std::int64_t j0 = 0; j0 < g.n_cols; j0 += step) {
            std::int64_t cols = std::min(step, g.n_cols - j0);
            if (wn.requires_grad || xn.requires_grad)
                im2col_block(xn.value, g, j0, cols, colbuf.data());
            ConstMapMat cm(colbuf.data(), g.k_rows, cols);
            if (wn.requires_grad) {
                MapMat gwm(ensure_grad(wn).data(), g.co, g.k_rows);
                gwm.noalias() += gm.block(0, j0, g.co, cols) * cm.transpose();
            }
            if (xn.requires_grad) {
                MapMat gcm(gcolbuf.data(), g.k_rows, cols);
                gcm.noalias() = wm.transpose() * gm.block(0, j0, g.co, cols);
                col2im_block(gcolbuf.data(), g, j0, cols, ensure_grad(xn));
            }
        }
        if (bn.requires_grad) {
            Tensor& gb = ensure_grad(bn);
            for (int o = 0; o < g.co; ++o) {
                const double* row = n.grad.data() + static_cast<std::int64_t>(o) * g.n_cols;
                double s = 0.0;
                for (std::int64_t j = 0; j < g.n_cols; ++j) s += row[j];
                gb[o] += s;
            }
        }
    });
}

}  // namespace sdgan::ad
