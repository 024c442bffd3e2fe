#include "sdgan/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace sdgan::ad {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

Var constant(Tensor value) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    return Var(n);
}

Var parameter(Tensor value) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = true;
    return Var(n);
}

Tensor& ensure_grad(Node& n) {
    if (n.grad.empty()) n.grad = Tensor(n.value.shape());
    return n.grad;
}

void zero_grad(Var& v) {
    if (v.node && !v.node->grad.empty()) v.node->grad.fill(0.0);
}

Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backprop) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    bool track = g_grad_enabled;
    if (track) {
        bool any = false;
        for (const Var& p : parents) any = any || p.requires_grad();
        track = any;
    }
    if (track) {
        n->requires_grad = true;
        n->parents.reserve(parents.size());
        for (Var& p : parents) n->parents.push_back(std::move(p.node));
        n->backprop = std::move(backprop);
    }
    return Var(n);
}

void backward(const Var& loss) {
    if (!loss.defined() || loss.value().numel() != 1)
        throw BadShape("backward expects a scalar loss");
    if (!loss.node->requires_grad) return;

    // iterative post-order DFS
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(loss.node.get(), 0);
    seen.insert(loss.node.get());
    while (!stack.empty()) {
        auto& [n, idx] = stack.back();
        if (idx < n->parents.size()) {
            Node* p = n->parents[idx++].get();
            if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }

    ensure_grad(*loss.node)[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backprop && !n->grad.empty()) n->backprop(*n);
    }
}

// ---- elementwise ----

Var add(const Var& a, const Var& b) {
    require_same_shape(a.value(), b.value(), "add");
    Tensor out = a.value();
    const double* pb = b.value().data();
    double* po = out.data();
    for (std::int64_t i = 0; i < out.numel(); ++i) po[i] += pb[i];
    return make_op(std::move(out), {a, b}, [](Node& n) {
        for (int k = 0; k < 2; ++k) {
            Node& p = *n.parents[k];
            if (!p.requires_grad) continue;
            Tensor& g = ensure_grad(p);
            for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i];
        }
    });
}

Var sub(const Var& a, const Var& b) {
    require_same_shape(a.value(), b.value(), "sub");
    Tensor out = a.value();
    const double* pb = b.value().data();
    double* po = out.data();
    for (std::int64_t i = 0; i < out.numel(); ++i) po[i] -= pb[i];
    return make_op(std::move(out), {a, b}, [](Node& n) {
        if (n.parents[0]->requires_grad) {
            Tensor& g = ensure_grad(*n.parents[0]);
            for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i];
        }
        if (n.parents[1]->requires_grad) {
            Tensor& g = ensure_grad(*n.parents[1]);
            for (std::int64_t i = 0; i < g.numel(); ++i) g[i] -= n.grad[i];
        }
    });
}

Var mul(const Var& a, const Var& b) {
    require_same_shape(a.value(), b.value(), "mul");
    Tensor out = a.value();
    const double* pb = b.value().data();
    double* po = out.data();
    for (std::int64_t i = 0; i < out.numel(); ++i) po[i] *= pb[i];
    return make_op(std::move(out), {a, b}, [](Node& n) {
        const Tensor& av = n.parents[0]->value;
        const Tensor& bv = n.parents[1]->value;
        if (n.parents[0]->requires_grad) {
            Tensor& g = ensure_grad(*n.parents[0]);
            for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i] * bv[i];
        }
        if (n.parents[1]->requires_grad) {
            Tensor& g = ensure_grad(*n.parents[1]);
            for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i] * av[i];
        }
    });
}

Var scale(const Var& a, double k) {
    Tensor out = a.value();
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] *= k;
    return make_op(std::move(out), {a}, [k](Node& n) {
        Tensor& g = ensure_grad(*n.parents[0]);
        for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += k * n.grad[i];
    });
}

Var add_scalar(const Var& a, double k) {
    Tensor out = a.value();
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] += k;
    return make_op(std::move(out), {a}, [](Node& n) {
        Tensor& g = ensure_grad(*n.parents[0]);
        for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i];
    });
}

Var relu(const Var& a) { return leaky_relu(a, 0.0); }

Var leaky_relu(const Var& a, double slope) {
    Tensor out = a.value();
    for (std::int64_t i = 0; i < out.numel(); ++i)
        if (out[i] < 0.0) out[i] *= slope;
    return make_op(std::move(out), {a}, [slope](Node& n) {
        const Tensor& x = n.parents[0]->value;
        Tensor& g = ensure_grad(*n.parents[0]);
        for (std::int64_t i = 0; i < g.numel(); ++i)
            g[i] += n.grad[i] * (x[i] >= 0.0 ? 1.0 : slope);
    });
}

Var tanh_op(const Var& a) {
    Tensor out = a.value();
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = std::tanh(out[i]);
    Tensor y = out;
    return make_op(std::move(out), {a}, [y = std::move(y)](Node& n) {
        Tensor& g = ensure_grad(*n.parents[0]);
        for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i] * (1.0 - y[i] * y[i]);
    });
}

Var sigmoid(const Var& a) {
    Tensor out = a.value();
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = 1.0 / (1.0 + std::exp(-out[i]));
    Tensor y = out;
    return make_op(std::move(out), {a}, [y = std::move(y)](Node& n) {
        Tensor& g = ensure_grad(*n.parents[0]);
        for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i] * y[i] * (1.0 - y[i]);
    });
}

Var softplus(const Var& a) {
    Tensor out = a.value();
    for (std::int64_t i = 0; i < out.numel(); ++i) {
        double z = out[i];
        out[i] = std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
    }
    return make_op(std::move(out), {a}, [](Node& n) {
        const Tensor& x = n.parents[0]->value;
        Tensor& g = ensure_grad(*n.parents[0]);
        for (std::int64_t i = 0; i < g.numel(); ++i)
            g[i] += n.grad[i] / (1.0 + std::exp(-x[i]));
    });
}

Var square(const Var& a) {
    Tensor out = a.value();
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] *= out[i];
    return make_op(std::move(out), {a}, [](Node& n) {
        const Tensor& x = n.parents[0]->value;
        Tensor& g = ensure_grad(*n.parents[0]);
        for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i] * 2.0 * x[i];
    });
}

Var abs_op(const Var& a) {
    Tensor out = a.value();
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = std::abs(out[i]);
    return make_op(std::move(out), {a}, [](Node& n) {
        const Tensor& x = n.parents[0]->value;
        Tensor& g = ensure_grad(*n.parents[0]);
        for (std::int64_t i = 0; i < g.numel(); ++i) {
            double s = x[i] > 0.0 ? 1.0 : (x[i] < 0.0 ? -1.0 : 0.0);
            g[i] += n.grad[i] * s;
        }
    });
}

// ---- reductions ----

Var sum_all(const Var& a) {
    double s = 0.0;
    for (std::int64_t i = 0; i < a.value().numel(); ++i) s += a.value()[i];
    Tensor out({1});
    out[0] = s;
    return make_op(std::move(out), {a}, [](Node& n) {
        Tensor& g = ensure_grad(*n.parents[0]);
        double go = n.grad[0];
        for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += go;
    });
}

Var mean_all(const Var& a) {
    std::int64_t count = a.value().numel();
    double s = 0.0;
    for (std::int64_t i = 0; i < count; ++i) s += a.value()[i];
    Tensor out({1});
    out[0] = s / static_cast<double>(count);
    return make_op(std::move(out), {a}, [count](Node& n) {
        Tensor& g = ensure_grad(*n.parents[0]);
        double go = n.grad[0] / static_cast<double>(count);
        for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += go;
    });
}

// ---- structural ----

Var concat_channels(const std::vector<Var>& parts) {
    if (parts.empty()) throw BadShape("concat_channels: no inputs");
    int h = parts[0].value().dim(1), w = parts[0].value().dim(2);
    int ctot = 0;
    for (const Var& p : parts) {
        if (p.value().ndim() != 3 || p.value().dim(1) != h || p.value().dim(2) != w)
            throw ShapeMismatch("concat_channels: spatial sizes differ");
        ctot += p.value().dim(0);
    }
    Tensor out({ctot, h, w});
    std::int64_t off = 0;
    for (const Var& p : parts) {
        std::int64_t n = p.value().numel();
        std::copy(p.value().data(), p.value().data() + n, out.data() + off);
        off += n;
    }
    return make_op(std::move(out), parts, [](Node& n) {
        std::int64_t off = 0;
        for (auto& pp : n.parents) {
            std::int64_t cnt = pp->value.numel();
            if (pp->requires_grad) {
                Tensor& g = ensure_grad(*pp);
                for (std::int64_t i = 0; i < cnt; ++i) g[i] += n.grad[off + i];
            }
            off += cnt;
        }
    });
}

Var channel_mean(const Var& a) {
    const Tensor& x = a.value();
    if (x.ndim() != 3) throw BadShape("channel_mean expects {c,h,w}");
    int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    Tensor out({1, h, w});
    std::int64_t hw = static_cast<std::int64_t>(h) * w;
    for (std::int64_t p = 0; p < hw; ++p) {
        double s = 0.0;
        for (int k = 0; k < c; ++k) s += x[k * hw + p];
        out[p] = s / c;
    }
    return make_op(std::move(out), {a}, [c, hw](Node& n) {
        Tensor& g = ensure_grad(*n.parents[0]);
        for (std::int64_t p = 0; p < hw; ++p) {
            double go = n.grad[p] / c;
            for (int k = 0; k < c; ++k) g[k * hw + p] += go;
        }
    });
}

Var upsample2_nearest(const Var& a) {
    const Tensor& x = a.value();
    if (x.ndim() != 3) throw BadShape("upsample2_nearest expects {c,h,w}");
    int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    Tensor out({c, 2 * h, 2 * w});
    for (int k = 0; k < c; ++k)
        for (int y = 0; y < 2 * h; ++y)
            for (int xx = 0; xx < 2 * w; ++xx)
                out.at(k, y, xx) = x.at(k, y / 2, xx / 2);
    return make_op(std::move(out), {a}, [c, h, w](Node& n) {
        Tensor& g = ensure_grad(*n.parents[0]);
        for (int k = 0; k < c; ++k)
            for (int y = 0; y < 2 * h; ++y)
                for (int xx = 0; xx < 2 * w; ++xx)
                    g.at(k, y / 2, xx / 2) += n.grad.at(k, y, xx);
    });
}

namespace {
// align-corners=false sampling: out pixel oy maps to oy/2 - 0.25
void bilinear2_taps(int o, int in_size, int& i0, int& i1, double& w1) {
    double src = 0.5 * o - 0.25;
    double f = std::floor(src);
    i0 = static_cast<int>(f);
    i1 = i0 + 1;
    w1 = src - f;
    if (i0 < 0) i0 = 0;
    if (i1 < 0) i1 = 0;
    if (i0 > in_size - 1) i0 = in_size - 1;
    if (i1 > in_size - 1) i1 = in_size - 1;
}
}  // namespace

Var upsample2_bilinear(const Var& a) {
    const Tensor& x = a.value();
    if (x.ndim() != 3) throw BadShape("upsample2_bilinear expects {c,h,w}");
    int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    Tensor out({c, 2 * h, 2 * w});
    for (int k = 0; k < c; ++k)
        for (int y = 0; y < 2 * h; ++y) {
            int y0, y1;
            double wy;
            bilinear2_taps(y, h, y0, y1, wy);
            for (int xx = 0; xx < 2 * w; ++xx) {
                int x0, x1;
                double wx;
                bilinear2_taps(xx, w, x0, x1, wx);
                out.at(k, y, xx) = (1 - wy) * ((1 - wx) * x.at(k, y0, x0) + wx * x.at(k, y0, x1)) +
                                   wy * ((1 - wx) * x.at(k, y1, x0) + wx * x.at(k, y1, x1));
            }
        }
    return make_op(std::move(out), {a}, [c, h, w](Node& n) {
        Tensor& g = ensure_grad(*n.parents[0]);
        for (int k = 0; k < c; ++k)
            for (int y = 0; y < 2 * h; ++y) {
                int y0, y1;
                double wy;
                bilinear2_taps(y, h, y0, y1, wy);
                for (int xx = 0; xx < 2 * w; ++xx) {
                    int x0, x1;
                    double wx;
                    bilinear2_taps(xx, w, x0, x1, wx);
                    double go = n.grad.at(k, y, xx);
                    g.at(k, y0, x0) += go * (1 - wy) * (1 - wx);
                    g.at(k, y0, x1) += go * (1 - wy) * wx;
                    g.at(k, y1, x0) += go * wy * (1 - wx);
                    g.at(k, y1, x1) += go * wy * wx;
                }
            }
    });
}

Var avgpool2(const Var& a) {
    const Tensor& x = a.value();
    if (x.ndim() != 3) throw BadShape("avgpool2 expects {c,h,w}");
    int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    int oh = h / 2, ow = w / 2;
    if (oh < 1 || ow < 1) throw BadShape("avgpool2: input too small");
    Tensor out({c, oh, ow});
    for (int k = 0; k < c; ++k)
        for (int y = 0; y < oh; ++y)
            for (int xx = 0; xx < ow; ++xx)
                out.at(k, y, xx) = 0.25 * (x.at(k, 2 * y, 2 * xx) + x.at(k, 2 * y, 2 * xx + 1) +
                                           x.at(k, 2 * y + 1, 2 * xx) + x.at(k, 2 * y + 1, 2 * xx + 1));
    return make_op(std::move(out), {a}, [c, oh, ow](Node& n) {
        Tensor& g = ensure_grad(*n.parents[0]);
        for (int k = 0; k < c; ++k)
            for (int y = 0; y < oh; ++y)
                for (int xx = 0; xx < ow; ++xx) {
                    double go = 0.25 * n.grad.at(k, y, xx);
                    g.at(k, 2 * y, 2 * xx) += go;
                    g.at(k, 2 * y, 2 * xx + 1) += go;
                    g.at(k, 2 * y + 1, 2 * xx) += go;
                    g.at(k, 2 * y + 1, 2 * xx + 1) += go;
                }
    });
}

// ---- instance norm ----

Var instance_norm(const Var& a, double eps) {
    const Tensor& x = a.value();
    if (x.ndim() != 3) throw BadShape("instance_norm expects {c,h,w}");
    int c = x.dim(0);
    std::int64_t hw = static_cast<std::int64_t>(x.dim(1)) * x.dim(2);
    Tensor out(x.shape());
    std::vector<double> inv_sigma(static_cast<std::size_t>(c));
    for (int k = 0; k < c; ++k) {
        const double* px = x.data() + k * hw;
        double m = 0.0;
        for (std::int64_t i = 0; i < hw; ++i) m += px[i];
        m /= static_cast<double>(hw);
        double v = 0.0;
        for (std::int64_t i = 0; i < hw; ++i) {
            double d = px[i] - m;
            v += d * d;
        }
        v /= static_cast<double>(hw);
        double is = 1.0 / std::sqrt(v + eps);
        inv_sigma[static_cast<std::size_t>(k)] = is;
        double* po = out.data() + k * hw;
        for (std::int64_t i = 0; i < hw; ++i) po[i] = (px[i] - m) * is;
    }
    Tensor y = out;
    return make_op(std::move(out), {a},
                   [c, hw, y = std::move(y), inv_sigma = std::move(inv_sigma)](Node& n) {
        // dx = inv_sigma * (g - mean(g) - y * mean(g*y)) per channel
        Tensor& g = ensure_grad(*n.parents[0]);
        for (int k = 0; k < c; ++k) {
            const double* py = y.data() + k * hw;
            const double* pg = n.grad.data() + k * hw;
            double* px = g.data() + k * hw;
            double mg = 0.0, mgy = 0.0;
            for (std::int64_t i = 0; i < hw; ++i) {
                mg += pg[i];
                mgy += pg[i] * py[i];
            }
            mg /= static_cast<double>(hw);
            mgy /= static_cast<double>(hw);
            double is = inv_sigma[static_cast<std::size_t>(k)];
            for (std::int64_t i = 0; i < hw; ++i)
                px[i] += is * (pg[i] - mg - py[i] * mgy);
        }
    });
}

// ---- loss kernels ----

Var bce_with_logits_mean(const Var& logits, double target) {
    const Tensor& z = logits.value();
    std::int64_t count = z.numel();
    double s = 0.0;
    for (std::int64_t i = 0; i < count; ++i) {
        double zi = z[i];
        s += std::max(zi, 0.0) - zi * target + std::log1p(std::exp(-std::abs(zi)));
    }
    Tensor out({1});
    out[0] = s / static_cast<double>(count);
    return make_op(std::move(out), {logits}, [target, count](Node& n) {
        const Tensor& z = n.parents[0]->value;
        Tensor& g = ensure_grad(*n.parents[0]);
        double go = n.grad[0] / static_cast<double>(count);
        for (std::int64_t i = 0; i < count; ++i) {
            double p = 1.0 / (1.0 + std::exp(-z[i]));
            g[i] += go * (p - target);
        }
    });
}

Var bce_probs_mean(const Var& p, const Tensor& q, double eps) {
    require_same_shape(p.value(), q, "bce_probs_mean");
    std::int64_t count = p.value().numel();
    double s = 0.0;
    for (std::int64_t i = 0; i < count; ++i) {
        double pc = std::min(std::max(p.value()[i], eps), 1.0 - eps);
        double qc = std::min(std::max(q[i], eps), 1.0 - eps);
        s += -(qc * std::log(pc) + (1.0 - qc) * std::log(1.0 - pc));
    }
    Tensor out({1});
    out[0] = s / static_cast<double>(count);
    return make_op(std::move(out), {p}, [q, eps, count](Node& n) {
        const Tensor& pv = n.parents[0]->value;
        Tensor& g = ensure_grad(*n.parents[0]);
        double go = n.grad[0] / static_cast<double>(count);
        for (std::int64_t i = 0; i < count; ++i) {
            double raw = pv[i];
            if (raw < eps || raw > 1.0 - eps) continue;  // clamped: no gradient
            double qc = std::min(std::max(q[i], eps), 1.0 - eps);
            g[i] += go * (-qc / raw + (1.0 - qc) / (1.0 - raw));
        }
    });
}

}  // namespace sdgan::ad
