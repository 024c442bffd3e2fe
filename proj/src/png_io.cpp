#include "sdgan/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "sdgan/errors.hpp"

namespace sdgan::io {

PngImage read_png(const std::string& path, int want_channels) {
    if (!std::filesystem::exists(path)) throw MissingFile("no such file: " + path);

    png_image im{};
    im.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&im, path.c_str())) {
        std::string msg = im.message;
        png_image_free(&im);
        throw CorruptFile("cannot read " + path + ": " + msg);
    }
    int channels = want_channels;
    if (channels == 0) channels = (PNG_IMAGE_PIXEL_CHANNELS(im.format) >= 3) ? 3 : 1;
    im.format = (channels == 3) ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;

    PngImage out;
    out.width = static_cast<int>(im.width);
    out.height = static_cast<int>(im.height);
    out.channels = channels;
    out.pixels.resize(PNG_IMAGE_SIZE(im));
    if (!png_image_finish_read(&im, nullptr, out.pixels.data(), 0, nullptr)) {
        std::string msg = im.message;
        png_image_free(&im);
        throw CorruptFile("cannot decode " + path + ": " + msg);
    }
    return out;
}

void write_png(const std::string& path, const PngImage& img) {
    if (img.channels != 1 && img.channels != 3) throw BadShape("png channels must be 1 or 3");
    if (img.width < 1 || img.height < 1) throw BadShape("png dims must be positive");
    if (img.pixels.size() !=
        static_cast<std::size_t>(img.width) * img.height * img.channels)
        throw BadShape("png pixel buffer size mismatch");

    png_image im{};
    im.version = PNG_IMAGE_VERSION;
    im.width = static_cast<png_uint_32>(img.width);
    im.height = static_cast<png_uint_32>(img.height);
    im.format = (img.channels == 3) ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&im, path.c_str(), 0, img.pixels.data(), 0, nullptr)) {
        std::string msg = im.message;
        png_image_free(&im);
        throw Error("cannot write " + path + ": " + msg);
    }
}

Tensor png_to_grid(const PngImage& img, int want_channels) {
    if (want_channels != 1 && want_channels != 3) throw BadShape("want_channels must be 1 or 3");
    Tensor t({want_channels, img.height, img.width});
    std::int64_t hw = static_cast<std::int64_t>(img.height) * img.width;
    for (std::int64_t p = 0; p < hw; ++p) {
        if (img.channels == want_channels) {
            for (int k = 0; k < want_channels; ++k)
                t[k * hw + p] = img.pixels[p * img.channels + k] / 127.5 - 1.0;
        } else if (img.channels == 1) {  // replicate gray to rgb
            double v = img.pixels[p] / 127.5 - 1.0;
            for (int k = 0; k < want_channels; ++k) t[k * hw + p] = v;
        } else {  // rgb collapsed to gray by channel mean
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += img.pixels[p * 3 + k];
            t[p] = s / 3.0 / 127.5 - 1.0;
        }
    }
    return t;
}

PngImage grid_to_png(const Tensor& t) {
    if (t.ndim() != 3 || (t.dim(0) != 1 && t.dim(0) != 3))
        throw BadShape("grid must be {1|3,h,w}");
    PngImage img;
    img.channels = t.dim(0);
    img.height = t.dim(1);
    img.width = t.dim(2);
    std::int64_t hw = static_cast<std::int64_t>(img.height) * img.width;
    img.pixels.resize(static_cast<std::size_t>(hw) * img.channels);
    for (std::int64_t p = 0; p < hw; ++p)
        for (int k = 0; k < img.channels; ++k) {
            long b = std::lround((t[k * hw + p] + 1.0) * 127.5);
            img.pixels[p * img.channels + k] =
                static_cast<std::uint8_t>(std::clamp(b, 0l, 255l));
        }
    return img;
}

std::vector<std::uint8_t> read_label_png(const std::string& path, int& h, int& w) {
    PngImage img = read_png(path, 1);
    h = img.height;
    w = img.width;
    return std::move(img.pixels);
}

void write_label_png(const std::string& path, const std::vector<std::uint8_t>& labels, int h,
                     int w) {
    PngImage img;
    img.width = w;
    img.height = h;
    img.channels = 1;
    img.pixels = labels;
    write_png(path, img);
}

}  // namespace sdgan::io
