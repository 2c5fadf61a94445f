#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tcal {

// Single-channel raster of doubles, row-major, origin top-left. Pixel (x, y)
// refers to the centre of that cell; fractional coordinates interpolate.
struct ScalarImage {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  ScalarImage() = default;
  ScalarImage(int w, int h, double fill = 0.0)
      : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

  double& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
  double at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }

  double at_clamped(int x, int y) const {
    x = x < 0 ? 0 : (x >= width ? width - 1 : x);
    y = y < 0 ? 0 : (y >= height ? height - 1 : y);
    return at(x, y);
  }

  bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
  size_t pixel_count() const { return data.size(); }
};

// Bilinear sample with clamped borders; (x, y) may be anywhere.
double bilinear_sample(const ScalarImage& img, double x, double y);

// Binary PGM (P5). Values are stored as written; maxval <= 255 loads/saves one
// byte per pixel, larger maxvals use two bytes big-endian. Round-tripping a
// 16-bit file reproduces it byte for byte.
ScalarImage load_pgm(const std::string& path, int* maxval_out = nullptr);
void save_pgm(const ScalarImage& img, const std::string& path, int maxval = 65535);

// Raw little-endian float32 with a one-line JSON sidecar (path + ".json")
// holding {"width":..,"height":..,"dtype":"f32"}.
ScalarImage load_raw_f32(const std::string& path);
void save_raw_f32(const ScalarImage& img, const std::string& path);

}  // namespace tcal
