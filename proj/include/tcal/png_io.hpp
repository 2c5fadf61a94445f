#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tcal/image.hpp"

namespace tcal {

// Interleaved 8-bit RGB raster.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // 3 bytes per pixel, row-major

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), data(static_cast<size_t>(w) * h * 3, 0) {}
  std::uint8_t* px(int x, int y) { return &data[(static_cast<size_t>(y) * width + x) * 3]; }
};

// Minimal PNG writers (zlib-deflated, filter 0). Grayscale input values are
// rounded and clamped to [0, 255].
void save_png_gray(const ScalarImage& img, const std::string& path);
void save_png_rgb(const RgbImage& img, const std::string& path);

}  // namespace tcal
