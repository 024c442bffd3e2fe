#pragma once

#include <string>
#include <vector>

#include "sdgan/image.hpp"

namespace sdgan::data {

struct ManifestEntry {
    std::string id;
    std::string photo_path;
    std::string sketch_path;  // empty for inference manifests without sketches
    std::string saliency_path;
    std::string layout_path;
};

struct DatasetManifest {
    std::string root;
    std::string split;
    std::vector<ManifestEntry> entries;  // sorted by id
};

// <root>/<split>/{photos,sketches,saliency,parsing}/<id>.png
DatasetManifest load_manifest(const std::string& root, const std::string& split);
// same layout minus the split level; sketches optional
DatasetManifest load_infer_manifest(const std::string& dir);

// decode one entry; no geometry changes
PairedSample load_sample(const ManifestEntry& e, LabelTable table, bool require_sketch);

// 200 wide x 250 tall -> 204x256 bilinear (nearest for the layout) -> 26-column
// edge replication each side -> 256x256
inline constexpr int kRawWidth = 200;
inline constexpr int kRawHeight = 250;
inline constexpr int kScaledWidth = 204;
inline constexpr int kPadCols = 26;
inline constexpr int kNetSize = 256;

PairedSample preprocess_pair(const PairedSample& raw);
Tensor invert_preprocess(const Tensor& padded);             // {c,256,256} -> {c,250,200}
SemanticLayout invert_preprocess_layout(const SemanticLayout& padded);

// raw samples either already network-sized (square power of two >= 32) or the
// 200x250 scan geometry which goes through preprocess_pair
bool needs_preprocess(int h, int w);
PairedSample prepare_sample(const PairedSample& s);  // BadShape for anything else

// deterministic synthetic dataset: smooth photos, edge sketches, stylized
// face layouts with at least 4 populated classes, radial saliency
std::vector<PairedSample> make_fixture(std::uint64_t seed, int n, int size);

// writes samples under <root>/<split>/... in the documented layout
void write_dataset(const std::vector<PairedSample>& samples, const std::string& root,
                   const std::string& split);

}  // namespace sdgan::data
