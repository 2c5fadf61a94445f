#pragma once

#include "tcal/geometry.hpp"
#include "tcal/image.hpp"

namespace tcal {

// Robust contrast stretch. Percentiles use the nearest-rank convention on the
// sorted pixel array: q(p) = v[round(p * (N - 1))]. Output is
// clip((I - q_lo) / (q_hi - q_lo), 0, 1). Throws DegenerateRange when the
// percentile spread is below 1e-12 (near-constant input).
ScalarImage percentile_normalize(const ScalarImage& img, double lo_pct = 0.01,
                                 double hi_pct = 0.99);

// Separable Gaussian, kernel radius ceil(3*sigma), replicated borders.
// sigma <= 0 returns the input unchanged.
ScalarImage gaussian_blur(const ScalarImage& img, double sigma);

struct SecondDerivatives {
  ScalarImage ixx, iyy, ixy;
};

// Repeated 3x3 Sobel passes: ixx = Sx(Sx(I)), iyy = Sy(Sy(I)), ixy = Sy(Sx(I)).
// Each pass runs separably with replicated borders, so the mixed derivative is
// order-independent. Requires width, height >= 3.
SecondDerivatives sobel_second_derivatives(const ScalarImage& img);

// Catmull-Rom bicubic resampling (a = -0.5) with pixel-centre alignment:
// source x = (dst_x + 0.5) / factor - 0.5. Output dims round(dims * factor).
ScalarImage resize_bicubic(const ScalarImage& img, double factor);

// Inverse-mapped projective warp: out(x, y) = bilinear(img, h^-1 (x, y)).
// Samples whose source coordinate leaves the input rectangle become 0.
ScalarImage warp_perspective(const ScalarImage& img, const Homography& h, int out_w, int out_h);

// Contrast-limited adaptive histogram equalisation on values in [0, 1].
// 256 bins per tile; per-bin clip limit clip_limit * tile_px / 256 with the
// excess redistributed uniformly; tile mappings blended bilinearly.
// A non-finite clip_limit disables clipping (plain tiled equalisation).
ScalarImage clahe(const ScalarImage& img, double clip_limit = 2.0, int tiles_x = 4,
                  int tiles_y = 4);

}  // namespace tcal
