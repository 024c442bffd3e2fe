#include "sdgan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "sdgan/dataio.hpp"
#include "sdgan/png_io.hpp"

namespace fs = std::filesystem;

namespace sdgan::metrics {

namespace {

constexpr int kWin = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 1e-4;    // (0.01 * L)^2, L = 1
constexpr double kC2 = 9e-4;    // (0.03 * L)^2

std::array<double, kWin> gaussian_taps() {
    std::array<double, kWin> t{};
    double sum = 0.0;
    for (int i = 0; i < kWin; ++i) {
        double d = i - (kWin - 1) / 2;
        t[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * kSigma * kSigma));
        sum += t[static_cast<std::size_t>(i)];
    }
    for (double& v : t) v /= sum;
    return t;
}

// separable valid-mode gaussian: {h,w} -> {h-10,w-10}
std::vector<double> blur_valid(const std::vector<double>& src, int h, int w,
                               const std::array<double, kWin>& taps) {
    int wo = w - kWin + 1;
    int ho = h - kWin + 1;
    std::vector<double> mid(static_cast<std::size_t>(h) * wo);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < wo; ++x) {
            double s = 0.0;
            for (int k = 0; k < kWin; ++k)
                s += taps[static_cast<std::size_t>(k)] *
                     src[static_cast<std::size_t>(y) * w + x + k];
            mid[static_cast<std::size_t>(y) * wo + x] = s;
        }
    std::vector<double> out(static_cast<std::size_t>(ho) * wo);
    for (int y = 0; y < ho; ++y)
        for (int x = 0; x < wo; ++x) {
            double s = 0.0;
            for (int k = 0; k < kWin; ++k)
                s += taps[static_cast<std::size_t>(k)] *
                     mid[static_cast<std::size_t>(y + k) * wo + x];
            out[static_cast<std::size_t>(y) * wo + x] = s;
        }
    return out;
}

std::set<std::string> png_ids(const std::string& dir) {
    if (!fs::is_directory(dir)) throw MissingFile("no such directory: " + dir);
    std::set<std::string> ids;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        fs::path p = e.path();
        if (p.extension() == ".png") ids.insert(p.stem().string());
    }
    return ids;
}

void append_row(std::string& out, const std::string& id, const SampleEval& s) {
    char buf[64];
    out += id;
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, ",%.9g", v);
        out += buf;
    };
    num(s.ssim);
    num(s.mae);
    for (double v : s.mae_class) num(v);
    out += ",,,\n";  // fsim, fid, lpips reserved
}

}  // namespace

double ssim(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "ssim");
    if (a.ndim() != 3 || a.dim(0) != 1) throw BadShape("ssim expects {1,h,w}, got " + a.shape_str());
    int h = a.dim(1), w = a.dim(2);
    if (h < kWin || w < kWin)
        throw BadShape("ssim needs at least " + std::to_string(kWin) + "x" + std::to_string(kWin));

    std::size_t n = static_cast<std::size_t>(h) * w;
    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
        double xv = (a[static_cast<std::int64_t>(i)] + 1.0) / 2.0;
        double yv = (b[static_cast<std::int64_t>(i)] + 1.0) / 2.0;
        x[i] = xv;
        y[i] = yv;
        xx[i] = xv * xv;
        yy[i] = yv * yv;
        xy[i] = xv * yv;
    }
    auto taps = gaussian_taps();
    std::vector<double> mx = blur_valid(x, h, w, taps);
    std::vector<double> my = blur_valid(y, h, w, taps);
    std::vector<double> mxx = blur_valid(xx, h, w, taps);
    std::vector<double> myy = blur_valid(yy, h, w, taps);
    std::vector<double> mxy = blur_valid(xy, h, w, taps);

    double sum = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
        double vx = mxx[i] - mx[i] * mx[i];
        double vy = myy[i] - my[i] * my[i];
        double cxy = mxy[i] - mx[i] * my[i];
        double num = (2.0 * mx[i] * my[i] + kC1) * (2.0 * cxy + kC2);
        double den = (mx[i] * mx[i] + my[i] * my[i] + kC1) * (vx + vy + kC2);
        sum += num / den;
    }
    return sum / static_cast<double>(mx.size());
}

MaskedMae masked_mae(const Tensor& a, const Tensor& b, const data::SemanticLayout& layout) {
    require_same_shape(a, b, "masked_mae");
    if (a.ndim() != 3 || a.dim(0) != 1)
        throw BadShape("masked_mae expects {1,h,w}, got " + a.shape_str());
    if (layout.height() != a.dim(1) || layout.width() != a.dim(2))
        throw ShapeMismatch("masked_mae: layout " + std::to_string(layout.height()) + "x" +
                            std::to_string(layout.width()) + " vs image " + a.shape_str());
    MaskedMae r;
    std::array<double, data::kNumClasses> sums{};
    double total = 0.0;
    int h = a.dim(1), w = a.dim(2);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double d = std::abs(a.at(0, y, x) - b.at(0, y, x));
            int c = layout.at(y, x);
            sums[static_cast<std::size_t>(c)] += d;
            ++r.counts[static_cast<std::size_t>(c)];
            total += d;
        }
    for (int c = 0; c < data::kNumClasses; ++c)
        if (r.counts[static_cast<std::size_t>(c)] > 0)
            r.per_class[static_cast<std::size_t>(c)] =
                sums[static_cast<std::size_t>(c)] /
                static_cast<double>(r.counts[static_cast<std::size_t>(c)]);
    r.overall = total / static_cast<double>(static_cast<std::int64_t>(h) * w);
    return r;
}

EvalReport evaluate_dirs(const std::string& pred_dir, const std::string& target_dir,
                         const std::string& layout_dir, EvalGeometry geometry,
                         data::LabelTable table) {
    std::set<std::string> preds = png_ids(pred_dir);
    std::set<std::string> targets = png_ids(target_dir);
    for (const auto& id : preds)
        if (!targets.count(id)) throw IdMismatch("prediction '" + id + "' has no target");
    for (const auto& id : targets)
        if (!preds.count(id)) throw IdMismatch("target '" + id + "' has no prediction");
    if (preds.empty()) throw EmptyDataset("no .png files in " + pred_dir);

    EvalReport report;
    for (const auto& id : preds) {
        std::string lpath = layout_dir + "/" + id + ".png";
        if (!fs::exists(lpath)) throw MissingFile("no layout for '" + id + "': " + lpath);
        Tensor p = io::png_to_grid(io::read_png(pred_dir + "/" + id + ".png", 1), 1);
        Tensor t = io::png_to_grid(io::read_png(target_dir + "/" + id + ".png", 1), 1);
        int lh = 0, lw = 0;
        auto raw = io::read_label_png(lpath, lh, lw);
        data::SemanticLayout layout = data::merge_classes(raw, lh, lw, table);
        require_same_shape(p, t, "evaluate_dirs '" + id + "'");
        if (geometry == EvalGeometry::padded256) {
            if (p.dim(1) != data::kNetSize || p.dim(2) != data::kNetSize)
                throw BadShape("'" + id + "' is " + p.shape_str() +
                               ", padded256 expects 256x256");
            p = data::invert_preprocess(p);
            t = data::invert_preprocess(t);
            layout = data::invert_preprocess_layout(layout);
        }
        SampleEval s;
        s.id = id;
        s.ssim = ssim(p, t);
        MaskedMae mm = masked_mae(p, t, layout);
        s.mae = mm.overall;
        s.mae_class = mm.per_class;
        report.samples.push_back(std::move(s));
    }

    auto acc = [&](auto get) {
        double m = 0.0;
        for (const auto& s : report.samples) m += get(s);
        m /= static_cast<double>(report.samples.size());
        double var = 0.0;
        for (const auto& s : report.samples) {
            double d = get(s) - m;
            var += d * d;
        }
        var /= static_cast<double>(report.samples.size());
        return std::pair<double, double>(m, std::sqrt(var));
    };
    report.mean.id = "mean";
    report.stddev.id = "stddev";
    auto [ms, ss] = acc([](const SampleEval& s) { return s.ssim; });
    report.mean.ssim = ms;
    report.stddev.ssim = ss;
    auto [mm, sm] = acc([](const SampleEval& s) { return s.mae; });
    report.mean.mae = mm;
    report.stddev.mae = sm;
    for (int c = 0; c < data::kNumClasses; ++c) {
        auto [mc, sc] =
            acc([c](const SampleEval& s) { return s.mae_class[static_cast<std::size_t>(c)]; });
        report.mean.mae_class[static_cast<std::size_t>(c)] = mc;
        report.stddev.mae_class[static_cast<std::size_t>(c)] = sc;
    }
    return report;
}

void write_report(const EvalReport& report, const std::string& path) {
    std::string out = "id,ssim,mae";
    for (const auto& name : data::class_names()) out += ",mae_" + name;
    out += ",fsim,fid,lpips\n";
    for (const auto& s : report.samples) append_row(out, s.id, s);
    append_row(out, report.mean.id, report.mean);
    append_row(out, report.stddev.id, report.stddev);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open for writing: " + path);
    os << out;
    os.flush();
    if (!os.good()) throw Error("write failed: " + path);
}

}  // namespace sdgan::metrics
