#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sdgan/errors.hpp"
#include "sdgan/tensor.hpp"

namespace sdgan::data {

inline constexpr int kNumClasses = 12;

// canonical class order; parsing files store index + 1
enum class FaceClass : int {
    eyes = 0,
    eyebrows,
    ears,
    glasses,
    lips,
    inner_mouth,
    hair,
    nose,
    skin,
    neck,
    cloth,
    background
};

const std::array<std::string, kNumClasses>& class_names();

enum class LabelTable { canonical, celebamask };
LabelTable parse_label_table(const std::string& s);  // ConfigError on unknown name

// per-pixel class-index map; one-hot by construction
class SemanticLayout {
public:
    SemanticLayout() = default;
    SemanticLayout(int h, int w);  // filled with background

    int height() const { return h_; }
    int width() const { return w_; }
    bool empty() const { return idx_.empty(); }

    std::uint8_t& at(int y, int x) { return idx_[static_cast<std::size_t>(y) * w_ + x]; }
    std::uint8_t at(int y, int x) const { return idx_[static_cast<std::size_t>(y) * w_ + x]; }

    const std::vector<std::uint8_t>& indices() const { return idx_; }
    std::vector<std::uint8_t>& indices() { return idx_; }

    Tensor to_onehot() const;  // {12,h,w}
    static SemanticLayout from_onehot(const Tensor& t);  // BadShape unless strictly one-hot

private:
    int h_ = 0, w_ = 0;
    std::vector<std::uint8_t> idx_;
};

struct PairedSample {
    std::string id;
    Tensor photo;     // {3,h,w}
    Tensor sketch;    // {1,h,w}; empty for inference-only samples
    Tensor saliency;  // {1,h,w}
    SemanticLayout layout;
};

void validate_image(const Tensor& t, const std::string& what);  // finite, [-1,1], 1 or 3 channels
void validate_sample(const PairedSample& s, bool require_sketch);

// raw parser labels -> canonical 12-class layout
SemanticLayout merge_classes(const std::vector<std::uint8_t>& raw, int h, int w, LabelTable table);

// nearest-neighbor, target must divide the source dims
SemanticLayout downsample_layout(const SemanticLayout& layout, int th, int tw);

// general resamplers, align-corners=false convention
Tensor resize_bilinear(const Tensor& t, int oh, int ow);
Tensor resize_nearest(const Tensor& t, int oh, int ow);
SemanticLayout resize_layout_nearest(const SemanticLayout& layout, int oh, int ow);

Tensor pad_replicate_cols(const Tensor& t, int left, int right);
Tensor crop_cols(const Tensor& t, int x0, int w);
SemanticLayout pad_layout_cols(const SemanticLayout& l, int left, int right);
SemanticLayout crop_layout_cols(const SemanticLayout& l, int x0, int w);

}  // namespace sdgan::data
