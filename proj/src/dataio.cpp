#include "sdgan/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "sdgan/png_io.hpp"
#include "sdgan/rng.hpp"

namespace fs = std::filesystem;

namespace sdgan::data {

namespace {

std::vector<std::string> list_ids(const fs::path& dir) {
    std::vector<std::string> ids;
    if (!fs::is_directory(dir)) throw MissingFile("no such directory: " + dir.string());
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        if (e.path().extension() != ".png") continue;
        ids.push_back(e.path().stem().string());
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

DatasetManifest build_manifest(const fs::path& base, const std::string& root,
                               const std::string& split, bool sketches_required) {
    DatasetManifest m;
    m.root = root;
    m.split = split;
    std::vector<std::string> ids = list_ids(base / "photos");
    if (ids.empty()) throw EmptyDataset("no photos under " + (base / "photos").string());
    for (const auto& id : ids) {
        ManifestEntry e;
        e.id = id;
        e.photo_path = (base / "photos" / (id + ".png")).string();
        e.sketch_path = (base / "sketches" / (id + ".png")).string();
        e.saliency_path = (base / "saliency" / (id + ".png")).string();
        e.layout_path = (base / "parsing" / (id + ".png")).string();
        if (!fs::exists(e.sketch_path)) {
            if (sketches_required) throw MissingFile("missing sketch for id " + id);
            e.sketch_path.clear();
        }
        if (!fs::exists(e.saliency_path)) throw MissingFile("missing saliency for id " + id);
        if (!fs::exists(e.layout_path)) throw MissingFile("missing parsing for id " + id);
        m.entries.push_back(std::move(e));
    }
    return m;
}

}  // namespace

DatasetManifest load_manifest(const std::string& root, const std::string& split) {
    return build_manifest(fs::path(root) / split, root, split, true);
}

DatasetManifest load_infer_manifest(const std::string& dir) {
    return build_manifest(fs::path(dir), dir, "", false);
}

PairedSample load_sample(const ManifestEntry& e, LabelTable table, bool require_sketch) {
    PairedSample s;
    s.id = e.id;
    s.photo = io::png_to_grid(io::read_png(e.photo_path), 3);
    if (!e.sketch_path.empty()) {
        s.sketch = io::png_to_grid(io::read_png(e.sketch_path), 1);
    } else if (require_sketch) {
        throw MissingFile("missing sketch for id " + e.id);
    }
    s.saliency = io::png_to_grid(io::read_png(e.saliency_path), 1);
    int lh = 0, lw = 0;
    std::vector<std::uint8_t> labels = io::read_label_png(e.layout_path, lh, lw);
    s.layout = merge_classes(labels, lh, lw, table);
    validate_sample(s, require_sketch);
    return s;
}

PairedSample preprocess_pair(const PairedSample& raw) {
    validate_sample(raw, false);
    if (raw.photo.dim(1) != kRawHeight || raw.photo.dim(2) != kRawWidth)
        throw BadShape("preprocess expects " + std::to_string(kRawWidth) + "x" +
                       std::to_string(kRawHeight) + " input, got " + raw.photo.shape_str());
    auto fix = [](const Tensor& t) {
        Tensor scaled = resize_bilinear(t, kNetSize, kScaledWidth);
        return pad_replicate_cols(scaled, kPadCols, kPadCols);
    };
    PairedSample out;
    out.id = raw.id;
    out.photo = fix(raw.photo);
    if (!raw.sketch.empty()) out.sketch = fix(raw.sketch);
    out.saliency = fix(raw.saliency);
    out.layout =
        pad_layout_cols(resize_layout_nearest(raw.layout, kNetSize, kScaledWidth), kPadCols,
                        kPadCols);
    validate_sample(out, false);
    return out;
}

Tensor invert_preprocess(const Tensor& padded) {
    if (padded.ndim() != 3 || padded.dim(1) != kNetSize || padded.dim(2) != kNetSize)
        throw BadShape("invert expects {c,256,256}, got " + padded.shape_str());
    return resize_bilinear(crop_cols(padded, kPadCols, kScaledWidth), kRawHeight, kRawWidth);
}

SemanticLayout invert_preprocess_layout(const SemanticLayout& padded) {
    if (padded.height() != kNetSize || padded.width() != kNetSize)
        throw BadShape("invert expects a 256x256 layout");
    return resize_layout_nearest(crop_layout_cols(padded, kPadCols, kScaledWidth), kRawHeight,
                                 kRawWidth);
}

bool needs_preprocess(int h, int w) { return h == kRawHeight && w == kRawWidth; }

namespace {
bool power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }
}  // namespace

PairedSample prepare_sample(const PairedSample& s) {
    int h = s.photo.dim(1), w = s.photo.dim(2);
    if (needs_preprocess(h, w)) return preprocess_pair(s);
    if (h == w && power_of_two(h) && h >= 32) return s;
    throw BadShape("sample " + s.id + " has unsupported geometry " + std::to_string(w) + "x" +
                   std::to_string(h));
}

namespace {

struct Rect {
    int y0, y1, x0, x1;  // half-open
};

void paint(SemanticLayout& l, const Rect& r, FaceClass c) {
    for (int y = std::max(0, r.y0); y < std::min(l.height(), r.y1); ++y)
        for (int x = std::max(0, r.x0); x < std::min(l.width(), r.x1); ++x)
            l.at(y, x) = static_cast<std::uint8_t>(c);
}

void paint_ellipse(SemanticLayout& l, double cy, double cx, double ry, double rx, FaceClass c) {
    for (int y = 0; y < l.height(); ++y)
        for (int x = 0; x < l.width(); ++x) {
            double dy = (y - cy) / ry, dx = (x - cx) / rx;
            if (dy * dy + dx * dx <= 1.0) l.at(y, x) = static_cast<std::uint8_t>(c);
        }
}

Rect frac_rect(int size, double y0, double y1, double x0, double x1, int jy, int jx) {
    Rect r;
    r.y0 = static_cast<int>(std::lround(y0 * size)) + jy;
    r.y1 = static_cast<int>(std::lround(y1 * size)) + jy;
    r.x0 = static_cast<int>(std::lround(x0 * size)) + jx;
    r.x1 = static_cast<int>(std::lround(x1 * size)) + jx;
    if (r.y1 <= r.y0) r.y1 = r.y0 + 1;
    if (r.x1 <= r.x0) r.x1 = r.x0 + 1;
    return r;
}

Tensor smooth_field(Rng& rng, int channels, int size) {
    int coarse = std::max(4, size / 8);
    Tensor seeded({channels, coarse, coarse});
    for (std::int64_t i = 0; i < seeded.numel(); ++i) seeded[i] = rng.normal(0.0, 0.6);
    Tensor up = resize_bilinear(seeded, size, size);
    for (std::int64_t i = 0; i < up.numel(); ++i) up[i] = std::clamp(up[i], -0.95, 0.95);
    return up;
}

Tensor edge_sketch(const Tensor& photo) {
    int h = photo.dim(1), w = photo.dim(2);
    Tensor lum({1, h, w});
    std::int64_t hw = static_cast<std::int64_t>(h) * w;
    for (std::int64_t p = 0; p < hw; ++p)
        lum[p] = (photo[p] + photo[hw + p] + photo[2 * hw + p]) / 3.0;
    auto px = [&](int y, int x) {
        return lum.at(0, std::clamp(y, 0, h - 1), std::clamp(x, 0, w - 1));
    };
    Tensor out({1, h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double gx = px(y - 1, x + 1) + 2 * px(y, x + 1) + px(y + 1, x + 1) -
                        px(y - 1, x - 1) - 2 * px(y, x - 1) - px(y + 1, x - 1);
            double gy = px(y + 1, x - 1) + 2 * px(y + 1, x) + px(y + 1, x + 1) -
                        px(y - 1, x - 1) - 2 * px(y - 1, x) - px(y - 1, x + 1);
            double mag = std::sqrt(gx * gx + gy * gy);
            out.at(0, y, x) = std::clamp(1.0 - 4.0 * mag, -1.0, 1.0);
        }
    return out;
}

Tensor radial_saliency(int size, double cy, double cx) {
    Tensor out({1, size, size});
    double rmax = size / 2.0;
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            double r = std::sqrt((y - cy) * (y - cy) + (x - cx) * (x - cx)) / rmax;
            out.at(0, y, x) = std::clamp(1.0 - 1.6 * r, -1.0, 1.0);
        }
    return out;
}

SemanticLayout face_layout(Rng& rng, int size) {
    auto jit = [&]() { return static_cast<int>(rng.next_below(size / 16 + 1)) - size / 32; };
    SemanticLayout l(size, size);
    int j1 = jit(), j2 = jit(), j3 = jit(), j4 = jit();
    paint(l, frac_rect(size, 0.92, 1.00, 0.0, 1.0, 0, 0), FaceClass::cloth);
    paint(l, frac_rect(size, 0.78, 0.93, 0.42, 0.58, j1, j2), FaceClass::neck);
    paint_ellipse(l, 0.38 * size + j1, 0.50 * size + j2, 0.30 * size, 0.34 * size,
                  FaceClass::hair);
    paint_ellipse(l, 0.55 * size + j1, 0.50 * size + j2, 0.30 * size, 0.26 * size,
                  FaceClass::skin);
    paint(l, frac_rect(size, 0.50, 0.60, 0.20, 0.26, j1, j2), FaceClass::ears);
    paint(l, frac_rect(size, 0.50, 0.60, 0.74, 0.80, j1, j2), FaceClass::ears);
    paint(l, frac_rect(size, 0.43, 0.46, 0.38, 0.46, j3, j4), FaceClass::eyebrows);
    paint(l, frac_rect(size, 0.43, 0.46, 0.54, 0.62, j3, j4), FaceClass::eyebrows);
    paint(l, frac_rect(size, 0.48, 0.52, 0.38, 0.46, j3, j4), FaceClass::eyes);
    paint(l, frac_rect(size, 0.48, 0.52, 0.54, 0.62, j3, j4), FaceClass::eyes);
    paint(l, frac_rect(size, 0.55, 0.66, 0.47, 0.53, j3, j4), FaceClass::nose);
    paint(l, frac_rect(size, 0.70, 0.76, 0.44, 0.56, j3, j4), FaceClass::lips);
    paint(l, frac_rect(size, 0.72, 0.74, 0.45, 0.55, j3, j4), FaceClass::inner_mouth);
    return l;
}

}  // namespace

std::vector<PairedSample> make_fixture(std::uint64_t seed, int n, int size) {
    if (n < 1) throw BadShape("fixture count must be positive");
    if (!power_of_two(size) || size < 32)
        throw BadShape("fixture size must be a power of two >= 32");
    Rng rng(seed);
    std::vector<PairedSample> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        PairedSample s;
        char buf[16];
        std::snprintf(buf, sizeof buf, "fx%04d", i);
        s.id = buf;
        s.photo = smooth_field(rng, 3, size);
        s.sketch = edge_sketch(s.photo);
        s.layout = face_layout(rng, size);
        double cy = size / 2.0 + rng.uniform(-size / 16.0, size / 16.0);
        double cx = size / 2.0 + rng.uniform(-size / 16.0, size / 16.0);
        s.saliency = radial_saliency(size, cy, cx);
        validate_sample(s, true);
        out.push_back(std::move(s));
    }
    return out;
}

void write_dataset(const std::vector<PairedSample>& samples, const std::string& root,
                   const std::string& split) {
    fs::path base = fs::path(root) / split;
    for (const char* sub : {"photos", "sketches", "saliency", "parsing"})
        fs::create_directories(base / sub);
    for (const auto& s : samples) {
        io::write_png((base / "photos" / (s.id + ".png")).string(), io::grid_to_png(s.photo));
        if (!s.sketch.empty())
            io::write_png((base / "sketches" / (s.id + ".png")).string(),
                          io::grid_to_png(s.sketch));
        io::write_png((base / "saliency" / (s.id + ".png")).string(),
                      io::grid_to_png(s.saliency));
        std::vector<std::uint8_t> labels(s.layout.indices().size());
        for (std::size_t p = 0; p < labels.size(); ++p)
            labels[p] = static_cast<std::uint8_t>(s.layout.indices()[p] + 1);
        io::write_label_png((base / "parsing" / (s.id + ".png")).string(), labels,
                            s.layout.height(), s.layout.width());
    }
}

}  // namespace sdgan::data
