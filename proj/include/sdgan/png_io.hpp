#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdgan/tensor.hpp"

namespace sdgan::io {

struct PngImage {
    int width = 0;
    int height = 0;
    int channels = 0;                  // 1 or 3
    std::vector<std::uint8_t> pixels;  // interleaved rows
};

// decodes to 8-bit gray or rgb; want_channels 0 keeps the file's own kind
PngImage read_png(const std::string& path, int want_channels = 0);
void write_png(const std::string& path, const PngImage& img);

// byte <-> [-1,1] grid conversion, v = b/127.5 - 1
Tensor png_to_grid(const PngImage& img, int want_channels);
PngImage grid_to_png(const Tensor& t);

// label maps travel as raw bytes of a grayscale file
std::vector<std::uint8_t> read_label_png(const std::string& path, int& h, int& w);
void write_label_png(const std::string& path, const std::vector<std::uint8_t>& labels, int h,
                     int w);

}  // namespace sdgan::io
