#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sdgan/image.hpp"

namespace sdgan::metrics {

// structural similarity of two {1,h,w} grids in the [-1,1] convention,
// internally remapped to [0,1]: 11x11 Gaussian window sigma 1.5, K1=0.01,
// K2=0.03, valid windows only, so h and w must be at least 11
double ssim(const Tensor& a, const Tensor& b);

struct MaskedMae {
    std::array<double, data::kNumClasses> per_class{};  // 0 for empty classes
    std::array<std::int64_t, data::kNumClasses> counts{};
    double overall = 0.0;
};

MaskedMae masked_mae(const Tensor& a, const Tensor& b, const data::SemanticLayout& layout);

// padded256 undoes the 26-column replication and the 204->200 rescale before
// scoring; native scores the files as stored
enum class EvalGeometry { native, padded256 };

struct SampleEval {
    std::string id;
    double ssim = 0.0;
    double mae = 0.0;
    std::array<double, data::kNumClasses> mae_class{};
};

struct EvalReport {
    std::vector<SampleEval> samples;  // sorted by id
    SampleEval mean;
    SampleEval stddev;
};

EvalReport evaluate_dirs(const std::string& pred_dir, const std::string& target_dir,
                         const std::string& layout_dir, EvalGeometry geometry,
                         data::LabelTable table);

// csv: id,ssim,mae,12 per-class columns, then reserved empty fsim/fid/lpips
// columns; mean and stddev rows last
void write_report(const EvalReport& report, const std::string& path);

}  // namespace sdgan::metrics
