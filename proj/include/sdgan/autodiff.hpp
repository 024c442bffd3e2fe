#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "sdgan/errors.hpp"
#include "sdgan/tensor.hpp"

namespace sdgan::ad {

struct Node {
    Tensor value;
    Tensor grad;  // allocated lazily, empty until a gradient reaches it
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backprop;
};

class Var {
public:
    Var() = default;
    explicit Var(std::shared_ptr<Node> n) : node(std::move(n)) {}

    bool defined() const { return static_cast<bool>(node); }
    const Tensor& value() const { return node->value; }
    const Tensor& grad() const { return node->grad; }
    bool requires_grad() const { return node && node->requires_grad; }
    double scalar() const {
        if (!node || node->value.numel() != 1) throw BadShape("scalar() on non-scalar var");
        return node->value[0];
    }

    std::shared_ptr<Node> node;
};

bool grad_enabled();

// turns graph recording off for its scope
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};

Var constant(Tensor value);
Var parameter(Tensor value);

Tensor& ensure_grad(Node& n);
void zero_grad(Var& v);
void backward(const Var& loss);

// When recording is off or no parent needs gradients the parents and closure
// are dropped, so intermediates free eagerly.
Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backprop);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double k);
Var add_scalar(const Var& a, double k);
Var relu(const Var& a);
Var leaky_relu(const Var& a, double slope);
Var tanh_op(const Var& a);
Var sigmoid(const Var& a);
Var softplus(const Var& a);
Var square(const Var& a);
Var abs_op(const Var& a);
Var sum_all(const Var& a);
Var mean_all(const Var& a);
Var concat_channels(const std::vector<Var>& parts);
Var channel_mean(const Var& a);  // {c,h,w} -> {1,h,w}
Var upsample2_nearest(const Var& a);
Var upsample2_bilinear(const Var& a);
Var avgpool2(const Var& a);  // 2x2 window stride 2, trailing row/col dropped
Var conv2d(const Var& x, const Var& w, const Var& b, int stride = 1, int pad = 0);
Var instance_norm(const Var& a, double eps = 1e-5);
Var bce_with_logits_mean(const Var& logits, double target);
Var bce_probs_mean(const Var& p, const Tensor& q, double eps = 1e-7);

}  // namespace sdgan::ad
