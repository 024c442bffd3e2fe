#include "sdgan/tensor.hpp"

#include <cmath>

namespace sdgan {

namespace {
std::string shape_to_str(const std::vector<int>& s) {
    std::string r = "{";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) r += ",";
        r += std::to_string(s[i]);
    }
    return r + "}";
}
}  // namespace

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    if (shape_.empty()) throw BadShape("tensor needs at least one dim");
    std::int64_t n = 1;
    for (int d : shape_) {
        if (d <= 0) throw BadShape("tensor dims must be positive, got " + shape_to_str(shape_));
        n *= d;
    }
    data_.assign(static_cast<std::size_t>(n), 0.0);
}

Tensor Tensor::full(std::vector<int> shape, double v) {
    Tensor t(std::move(shape));
    t.fill(v);
    return t;
}

int Tensor::dim(int i) const {
    if (i < 0 || i >= ndim()) throw BadShape("dim index out of range");
    return shape_[static_cast<std::size_t>(i)];
}

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

void Tensor::fill(double v) {
    for (double& x : data_) x = v;
}

std::string Tensor::shape_str() const { return shape_to_str(shape_); }

void require_same_shape(const Tensor& a, const Tensor& b, const std::string& what) {
    if (!a.same_shape(b))
        throw ShapeMismatch(what + ": shape " + a.shape_str() + " vs " + b.shape_str());
}

}  // namespace sdgan
