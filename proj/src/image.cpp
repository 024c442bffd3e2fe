#include "sdgan/image.hpp"

#include <algorithm>
#include <cmath>

namespace sdgan::data {

const std::array<std::string, kNumClasses>& class_names() {
    static const std::array<std::string, kNumClasses> names = {
        "eyes",  "eyebrows", "ears", "glasses", "lips",  "inner_mouth",
        "hair",  "nose",     "skin", "neck",    "cloth", "background"};
    return names;
}

LabelTable parse_label_table(const std::string& s) {
    if (s == "canonical") return LabelTable::canonical;
    if (s == "celebamask") return LabelTable::celebamask;
    throw ConfigError("unknown label table '" + s + "' (expected canonical or celebamask)");
}

SemanticLayout::SemanticLayout(int h, int w) : h_(h), w_(w) {
    if (h < 1 || w < 1) throw BadShape("layout dims must be positive");
    idx_.assign(static_cast<std::size_t>(h) * w,
                static_cast<std::uint8_t>(FaceClass::background));
}

Tensor SemanticLayout::to_onehot() const {
    if (empty()) throw BadShape("to_onehot on empty layout");
    Tensor t({kNumClasses, h_, w_});
    std::int64_t hw = static_cast<std::int64_t>(h_) * w_;
    for (std::int64_t p = 0; p < hw; ++p) t[idx_[static_cast<std::size_t>(p)] * hw + p] = 1.0;
    return t;
}

SemanticLayout SemanticLayout::from_onehot(const Tensor& t) {
    if (t.ndim() != 3 || t.dim(0) != kNumClasses) throw BadShape("expected {12,h,w} one-hot");
    SemanticLayout l(t.dim(1), t.dim(2));
    std::int64_t hw = static_cast<std::int64_t>(l.h_) * l.w_;
    for (std::int64_t p = 0; p < hw; ++p) {
        int hit = -1;
        for (int c = 0; c < kNumClasses; ++c) {
            double v = t[c * hw + p];
            if (v == 1.0) {
                if (hit >= 0) throw BadShape("pixel with more than one active class");
                hit = c;
            } else if (v != 0.0) {
                throw BadShape("one-hot map with value outside {0,1}");
            }
        }
        if (hit < 0) throw BadShape("pixel with no active class");
        l.idx_[static_cast<std::size_t>(p)] = static_cast<std::uint8_t>(hit);
    }
    return l;
}

void validate_image(const Tensor& t, const std::string& what) {
    if (t.ndim() != 3) throw BadShape(what + ": expected {c,h,w}, got " + t.shape_str());
    int c = t.dim(0);
    if (c != 1 && c != 3) throw BadShape(what + ": channels must be 1 or 3");
    for (std::int64_t i = 0; i < t.numel(); ++i) {
        double v = t[i];
        if (!std::isfinite(v)) throw NonFinite(what + ": non-finite value");
        if (v < -1.0 || v > 1.0) throw BadShape(what + ": value outside [-1,1]");
    }
}

void validate_sample(const PairedSample& s, bool require_sketch) {
    validate_image(s.photo, "photo " + s.id);
    if (s.photo.dim(0) != 3) throw BadShape("photo " + s.id + ": expected 3 channels");
    validate_image(s.saliency, "saliency " + s.id);
    if (s.saliency.dim(0) != 1) throw BadShape("saliency " + s.id + ": expected 1 channel");
    int h = s.photo.dim(1), w = s.photo.dim(2);
    if (s.saliency.dim(1) != h || s.saliency.dim(2) != w)
        throw ShapeMismatch("saliency " + s.id + " does not match photo size");
    if (s.layout.height() != h || s.layout.width() != w)
        throw ShapeMismatch("layout " + s.id + " does not match photo size");
    if (require_sketch || !s.sketch.empty()) {
        validate_image(s.sketch, "sketch " + s.id);
        if (s.sketch.dim(0) != 1) throw BadShape("sketch " + s.id + ": expected 1 channel");
        if (s.sketch.dim(1) != h || s.sketch.dim(2) != w)
            throw ShapeMismatch("sketch " + s.id + " does not match photo size");
    }
}

namespace {

// CelebAMask-HQ 19-label ids onto the canonical 12; hat merges into hair,
// earrings into ears, necklaces into neck
int celebamask_to_canonical(int raw) {
    switch (raw) {
        case 0: return static_cast<int>(FaceClass::background);
        case 1: return static_cast<int>(FaceClass::skin);
        case 2: return static_cast<int>(FaceClass::nose);
        case 3: return static_cast<int>(FaceClass::glasses);
        case 4:
        case 5: return static_cast<int>(FaceClass::eyes);
        case 6:
        case 7: return static_cast<int>(FaceClass::eyebrows);
        case 8:
        case 9: return static_cast<int>(FaceClass::ears);
        case 10: return static_cast<int>(FaceClass::inner_mouth);
        case 11:
        case 12: return static_cast<int>(FaceClass::lips);
        case 13:
        case 14: return static_cast<int>(FaceClass::hair);
        case 15: return static_cast<int>(FaceClass::ears);
        case 16: return static_cast<int>(FaceClass::neck);
        case 17: return static_cast<int>(FaceClass::neck);
        case 18: return static_cast<int>(FaceClass::cloth);
        default: return -1;
    }
}

}  // namespace

SemanticLayout merge_classes(const std::vector<std::uint8_t>& raw, int h, int w,
                             LabelTable table) {
    if (static_cast<std::int64_t>(raw.size()) != static_cast<std::int64_t>(h) * w)
        throw BadShape("label map size does not match dims");
    SemanticLayout l(h, w);
    for (std::size_t p = 0; p < raw.size(); ++p) {
        int id = raw[p];
        int cls;
        if (table == LabelTable::canonical) {
            cls = (id >= 1 && id <= kNumClasses) ? id - 1 : -1;
        } else {
            cls = celebamask_to_canonical(id);
        }
        if (cls < 0)
            throw UnknownLabel("label id " + std::to_string(id) + " not in the source table");
        l.indices()[p] = static_cast<std::uint8_t>(cls);
    }
    return l;
}

SemanticLayout downsample_layout(const SemanticLayout& layout, int th, int tw) {
    if (layout.empty()) throw BadShape("downsample of empty layout");
    if (th < 1 || tw < 1 || layout.height() % th != 0 || layout.width() % tw != 0)
        throw BadShape("target " + std::to_string(th) + "x" + std::to_string(tw) +
                       " does not divide layout " + std::to_string(layout.height()) + "x" +
                       std::to_string(layout.width()));
    int ky = layout.height() / th, kx = layout.width() / tw;
    SemanticLayout out(th, tw);
    for (int y = 0; y < th; ++y)
        for (int x = 0; x < tw; ++x) out.at(y, x) = layout.at(y * ky + ky / 2, x * kx + kx / 2);
    return out;
}

namespace {

// align-corners=false source coordinate for a destination index
double src_coord(int d, int out_size, int in_size) {
    return (d + 0.5) * static_cast<double>(in_size) / out_size - 0.5;
}

int nearest_tap(int d, int out_size, int in_size) {
    int i = static_cast<int>(std::floor((d + 0.5) * static_cast<double>(in_size) / out_size));
    return std::clamp(i, 0, in_size - 1);
}

}  // namespace

Tensor resize_bilinear(const Tensor& t, int oh, int ow) {
    if (t.ndim() != 3) throw BadShape("resize expects {c,h,w}");
    if (oh < 1 || ow < 1) throw BadShape("resize target must be positive");
    int c = t.dim(0), h = t.dim(1), w = t.dim(2);
    Tensor out({c, oh, ow});
    for (int y = 0; y < oh; ++y) {
        double sy = src_coord(y, oh, h);
        int y0 = std::clamp(static_cast<int>(std::floor(sy)), 0, h - 1);
        int y1 = std::min(y0 + 1, h - 1);
        double fy = std::clamp(sy - std::floor(sy), 0.0, 1.0);
        if (sy < 0) fy = 0.0;
        for (int x = 0; x < ow; ++x) {
            double sx = src_coord(x, ow, w);
            int x0 = std::clamp(static_cast<int>(std::floor(sx)), 0, w - 1);
            int x1 = std::min(x0 + 1, w - 1);
            double fx = std::clamp(sx - std::floor(sx), 0.0, 1.0);
            if (sx < 0) fx = 0.0;
            for (int k = 0; k < c; ++k) {
                double top = (1 - fx) * t.at(k, y0, x0) + fx * t.at(k, y0, x1);
                double bot = (1 - fx) * t.at(k, y1, x0) + fx * t.at(k, y1, x1);
                out.at(k, y, x) = (1 - fy) * top + fy * bot;
            }
        }
    }
    return out;
}

Tensor resize_nearest(const Tensor& t, int oh, int ow) {
    if (t.ndim() != 3) throw BadShape("resize expects {c,h,w}");
    if (oh < 1 || ow < 1) throw BadShape("resize target must be positive");
    int c = t.dim(0), h = t.dim(1), w = t.dim(2);
    Tensor out({c, oh, ow});
    for (int y = 0; y < oh; ++y) {
        int sy = nearest_tap(y, oh, h);
        for (int x = 0; x < ow; ++x) {
            int sx = nearest_tap(x, ow, w);
            for (int k = 0; k < c; ++k) out.at(k, y, x) = t.at(k, sy, sx);
        }
    }
    return out;
}

SemanticLayout resize_layout_nearest(const SemanticLayout& layout, int oh, int ow) {
    if (layout.empty()) throw BadShape("resize of empty layout");
    if (oh < 1 || ow < 1) throw BadShape("resize target must be positive");
    SemanticLayout out(oh, ow);
    for (int y = 0; y < oh; ++y) {
        int sy = nearest_tap(y, oh, layout.height());
        for (int x = 0; x < ow; ++x) out.at(y, x) = layout.at(sy, nearest_tap(x, ow, layout.width()));
    }
    return out;
}

Tensor pad_replicate_cols(const Tensor& t, int left, int right) {
    if (t.ndim() != 3) throw BadShape("pad expects {c,h,w}");
    if (left < 0 || right < 0) throw BadShape("pad widths must be non-negative");
    int c = t.dim(0), h = t.dim(1), w = t.dim(2);
    Tensor out({c, h, w + left + right});
    for (int k = 0; k < c; ++k)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w + left + right; ++x)
                out.at(k, y, x) = t.at(k, y, std::clamp(x - left, 0, w - 1));
    return out;
}

Tensor crop_cols(const Tensor& t, int x0, int w) {
    if (t.ndim() != 3) throw BadShape("crop expects {c,h,w}");
    if (x0 < 0 || w < 1 || x0 + w > t.dim(2)) throw BadShape("crop window out of bounds");
    Tensor out({t.dim(0), t.dim(1), w});
    for (int k = 0; k < t.dim(0); ++k)
        for (int y = 0; y < t.dim(1); ++y)
            for (int x = 0; x < w; ++x) out.at(k, y, x) = t.at(k, y, x0 + x);
    return out;
}

SemanticLayout pad_layout_cols(const SemanticLayout& l, int left, int right) {
    if (l.empty()) throw BadShape("pad of empty layout");
    SemanticLayout out(l.height(), l.width() + left + right);
    for (int y = 0; y < l.height(); ++y)
        for (int x = 0; x < out.width(); ++x)
            out.at(y, x) = l.at(y, std::clamp(x - left, 0, l.width() - 1));
    return out;
}

SemanticLayout crop_layout_cols(const SemanticLayout& l, int x0, int w) {
    if (l.empty()) throw BadShape("crop of empty layout");
    if (x0 < 0 || w < 1 || x0 + w > l.width()) throw BadShape("crop window out of bounds");
    SemanticLayout out(l.height(), w);
    for (int y = 0; y < l.height(); ++y)
        for (int x = 0; x < w; ++x) out.at(y, x) = l.at(y, x0 + x);
    return out;
}

}  // namespace sdgan::data
