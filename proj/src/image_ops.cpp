#include "tcal/image_ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tcal/errors.hpp"

namespace tcal {

ScalarImage percentile_normalize(const ScalarImage& img, double lo_pct, double hi_pct) {
  if (img.pixel_count() == 0) throw ValidationError("percentile_normalize: empty image");
  if (!(lo_pct >= 0.0 && hi_pct <= 1.0 && lo_pct < hi_pct))
    throw ValidationError("percentile_normalize: bad percentile pair");

  std::vector<double> sorted(img.data);
  std::sort(sorted.begin(), sorted.end());
  const auto rank = [&sorted](double p) {
    const double idx = std::floor(p * static_cast<double>(sorted.size() - 1) + 0.5);
    return sorted[static_cast<size_t>(idx)];
  };
  const double q_lo = rank(lo_pct);
  const double q_hi = rank(hi_pct);
  const double span = q_hi - q_lo;
  if (span < 1e-12) throw DegenerateRange("percentile spread " + std::to_string(span));

  ScalarImage out(img.width, img.height);
  for (size_t i = 0; i < img.pixel_count(); ++i) {
    const double v = (img.data[i] - q_lo) / span;
    out.data[i] = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
  }
  return out;
}

namespace {

// 1D pass along x or y with replicated borders.
ScalarImage convolve_axis(const ScalarImage& img, const std::vector<double>& kernel, bool along_x) {
  const int r = static_cast<int>(kernel.size() / 2);
  ScalarImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double acc = 0.0;
      if (along_x) {
        for (int k = -r; k <= r; ++k) acc += kernel[k + r] * img.at_clamped(x + k, y);
      } else {
        for (int k = -r; k <= r; ++k) acc += kernel[k + r] * img.at_clamped(x, y + k);
      }
      out.at(x, y) = acc;
    }
  }
  return out;
}

}  // namespace

ScalarImage gaussian_blur(const ScalarImage& img, double sigma) {
  if (img.pixel_count() == 0) throw ValidationError("gaussian_blur: empty image");
  if (sigma <= 0.0) return img;
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * r + 1);
  double sum = 0.0;
  for (int k = -r; k <= r; ++k) {
    kernel[k + r] = std::exp(-0.5 * (k * k) / (sigma * sigma));
    sum += kernel[k + r];
  }
  for (double& w : kernel) w /= sum;
  return convolve_axis(convolve_axis(img, kernel, true), kernel, false);
}

SecondDerivatives sobel_second_derivatives(const ScalarImage& img) {
  if (img.width < 3 || img.height < 3)
    throw ImageTooSmall("sobel_second_derivatives needs at least 3x3, got " +
                        std::to_string(img.width) + "x" + std::to_string(img.height));
  // Sobel as smoothing [1 2 1] across, difference [-1 0 1] along the axis.
  const std::vector<double> smooth = {1.0, 2.0, 1.0};
  const std::vector<double> diff = {-1.0, 0.0, 1.0};
  auto sobel_x = [&](const ScalarImage& in) {
    return convolve_axis(convolve_axis(in, diff, true), smooth, false);
  };
  auto sobel_y = [&](const ScalarImage& in) {
    return convolve_axis(convolve_axis(in, smooth, true), diff, false);
  };
  SecondDerivatives d;
  const ScalarImage gx = sobel_x(img);
  d.ixx = sobel_x(gx);
  d.iyy = sobel_y(sobel_y(img));
  d.ixy = sobel_y(gx);
  return d;
}

namespace {

// Catmull-Rom weight, a = -0.5.
double cubic_weight(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

}  // namespace

ScalarImage resize_bicubic(const ScalarImage& img, double factor) {
  if (img.pixel_count() == 0) throw ValidationError("resize_bicubic: empty image");
  if (factor <= 0.0) throw ValidationError("resize_bicubic: factor must be positive");
  const int ow = std::max(1, static_cast<int>(std::floor(img.width * factor + 0.5)));
  const int oh = std::max(1, static_cast<int>(std::floor(img.height * factor + 0.5)));
  ScalarImage out(ow, oh);
  for (int oy = 0; oy < oh; ++oy) {
    const double sy = (oy + 0.5) / factor - 0.5;
    const int y0 = static_cast<int>(std::floor(sy));
    const double fy = sy - y0;
    double wy[4];
    for (int j = 0; j < 4; ++j) wy[j] = cubic_weight(fy - (j - 1));
    for (int ox = 0; ox < ow; ++ox) {
      const double sx = (ox + 0.5) / factor - 0.5;
      const int x0 = static_cast<int>(std::floor(sx));
      const double fx = sx - x0;
      double wx[4];
      for (int i = 0; i < 4; ++i) wx[i] = cubic_weight(fx - (i - 1));
      double acc = 0.0;
      for (int j = 0; j < 4; ++j) {
        double row = 0.0;
        for (int i = 0; i < 4; ++i) row += wx[i] * img.at_clamped(x0 + i - 1, y0 + j - 1);
        acc += wy[j] * row;
      }
      out.at(ox, oy) = acc;
    }
  }
  return out;
}

ScalarImage warp_perspective(const ScalarImage& img, const Homography& h, int out_w, int out_h) {
  if (img.pixel_count() == 0) throw ValidationError("warp_perspective: empty image");
  if (out_w <= 0 || out_h <= 0) throw ValidationError("warp_perspective: bad output size");
  const Homography inv = h.inverse();
  ScalarImage out(out_w, out_h);
  const double xmax = img.width - 1.0;
  const double ymax = img.height - 1.0;
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      const Point2 s = inv.apply({static_cast<double>(x), static_cast<double>(y)});
      if (s.x() < 0.0 || s.x() > xmax || s.y() < 0.0 || s.y() > ymax) continue;
      out.at(x, y) = bilinear_sample(img, s.x(), s.y());
    }
  }
  return out;
}

namespace {

constexpr int kClaheBins = 256;

inline int clahe_bin(double v) {
  int b = static_cast<int>(v * kClaheBins);
  return b < 0 ? 0 : (b >= kClaheBins ? kClaheBins - 1 : b);
}

}  // namespace

ScalarImage clahe(const ScalarImage& img, double clip_limit, int tiles_x, int tiles_y) {
  if (img.pixel_count() == 0) throw ValidationError("clahe: empty image");
  if (tiles_x < 1 || tiles_y < 1) throw ValidationError("clahe: tile grid must be >= 1x1");
  tiles_x = std::min(tiles_x, img.width);
  tiles_y = std::min(tiles_y, img.height);

  // Tile t spans [t*dim/tiles, (t+1)*dim/tiles).
  auto tile_x0 = [&](int t) { return t * img.width / tiles_x; };
  auto tile_y0 = [&](int t) { return t * img.height / tiles_y; };

  // Per-tile cumulative mapping bin -> [0, 1].
  std::vector<std::vector<double>> mapping(static_cast<size_t>(tiles_x) * tiles_y);
  std::vector<double> centre_x(tiles_x), centre_y(tiles_y);
  for (int ty = 0; ty < tiles_y; ++ty) {
    for (int tx = 0; tx < tiles_x; ++tx) {
      const int x0 = tile_x0(tx), x1 = tile_x0(tx + 1);
      const int y0 = tile_y0(ty), y1 = tile_y0(ty + 1);
      const double npx = static_cast<double>(x1 - x0) * (y1 - y0);
      std::vector<double> hist(kClaheBins, 0.0);
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) hist[clahe_bin(img.at(x, y))] += 1.0;

      if (std::isfinite(clip_limit)) {
        const double limit = std::max(clip_limit * npx / kClaheBins, 1.0);
        double excess = 0.0;
        for (double& hb : hist) {
          if (hb > limit) {
            excess += hb - limit;
            hb = limit;
          }
        }
        const double share = excess / kClaheBins;
        for (double& hb : hist) hb += share;
      }

      std::vector<double> cdf(kClaheBins);
      double run = 0.0;
      for (int b = 0; b < kClaheBins; ++b) {
        run += hist[b];
        cdf[b] = run / npx;
      }
      mapping[static_cast<size_t>(ty) * tiles_x + tx] = std::move(cdf);
      centre_x[tx] = 0.5 * (x0 + x1 - 1);
      centre_y[ty] = 0.5 * (y0 + y1 - 1);
    }
  }

  // Blend the four surrounding tile mappings per pixel; clamp at the borders.
  auto bracket = [](const std::vector<double>& centres, double v, int& i0, int& i1, double& w) {
    const int n = static_cast<int>(centres.size());
    if (v <= centres.front()) {
      i0 = i1 = 0;
      w = 0.0;
      return;
    }
    if (v >= centres.back()) {
      i0 = i1 = n - 1;
      w = 0.0;
      return;
    }
    int i = 0;
    while (i + 1 < n && centres[i + 1] < v) ++i;
    i0 = i;
    i1 = i + 1;
    w = (v - centres[i0]) / (centres[i1] - centres[i0]);
  };

  ScalarImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    int ty0, ty1;
    double wy;
    bracket(centre_y, y, ty0, ty1, wy);
    for (int x = 0; x < img.width; ++x) {
      int tx0, tx1;
      double wx;
      bracket(centre_x, x, tx0, tx1, wx);
      const int b = clahe_bin(img.at(x, y));
      const double m00 = mapping[static_cast<size_t>(ty0) * tiles_x + tx0][b];
      const double m10 = mapping[static_cast<size_t>(ty0) * tiles_x + tx1][b];
      const double m01 = mapping[static_cast<size_t>(ty1) * tiles_x + tx0][b];
      const double m11 = mapping[static_cast<size_t>(ty1) * tiles_x + tx1][b];
      out.at(x, y) = (1.0 - wy) * ((1.0 - wx) * m00 + wx * m10) + wy * ((1.0 - wx) * m01 + wx * m11);
    }
  }
  return out;
}

}  // namespace tcal
