#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdgan/errors.hpp"

namespace sdgan {

// dense row-major double tensor; rank is whatever the shape says, 3 and 4 in practice
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape);
    static Tensor full(std::vector<int> shape, double v);
    static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape_); }

    int ndim() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const;
    const std::vector<int>& shape() const { return shape_; }
    std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& vec() { return data_; }
    const std::vector<double>& vec() const { return data_; }

    double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    // {c,h,w}
    double& at(int c, int y, int x) {
        return data_[(static_cast<std::size_t>(c) * shape_[1] + y) * shape_[2] + x];
    }
    double at(int c, int y, int x) const {
        return data_[(static_cast<std::size_t>(c) * shape_[1] + y) * shape_[2] + x];
    }
    // {o,i,kh,kw}
    double& at4(int o, int i, int ky, int kx) {
        return data_[((static_cast<std::size_t>(o) * shape_[1] + i) * shape_[2] + ky) * shape_[3] +
                     kx];
    }
    double at4(int o, int i, int ky, int kx) const {
        return data_[((static_cast<std::size_t>(o) * shape_[1] + i) * shape_[2] + ky) * shape_[3] +
                     kx];
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
    bool all_finite() const;
    void fill(double v);
    std::string shape_str() const;

private:
    std::vector<int> shape_;
    std::vector<double> data_;
};

void require_same_shape(const Tensor& a, const Tensor& b, const std::string& what);

}  // namespace sdgan
