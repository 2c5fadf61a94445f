#pragma once

#include <string>
#include <utility>

#include "tcal/board.hpp"
#include "tcal/config.hpp"
#include "tcal/geometry.hpp"
#include "tcal/image.hpp"

namespace tcal {

// Checkerboard corner detection for low-resolution thermal frames. The
// pipeline runs: percentile normalisation, threshold-based board localisation,
// projective rectification with local contrast equalisation and bicubic
// upsampling, a saddle-point response map, mean-shift refinement from the
// nominal lattice, a geometric quality gate, and back-projection into the
// native frame.

// Locates the board in a normalised ([0, 1]) frame: Otsu threshold, 5x5
// morphological close (2 iters) then open (1 iter), largest 8-connected
// component, convex hull, Douglas-Peucker simplification to a 4-gon with the
// tolerance swept from 1% to 10% of the hull perimeter. `bright` selects which
// side of the threshold is treated as board.
QuadROI estimate_roi(const ScalarImage& normalised, const BoardSpec& spec, bool bright = true,
                     const DetectorConfig& cfg = {});

struct Rectified {
  ScalarImage image;    // equalised, upsampled board patch
  Homography h;         // native frame -> axis-aligned rectangle (pre-upsample)
  double pitch_x = 0.0; // square pitch in rectified pixels (kappa * native)
  double pitch_y = 0.0;
};

// Warps the quad to an axis-aligned rectangle, applies CLAHE at native scale,
// then upsamples by cfg.kappa with Catmull-Rom bicubic interpolation.
Rectified rectify(const ScalarImage& normalised, const QuadROI& roi,
                  const DetectorConfig& cfg = {});

// Corner-likelihood map: Gaussian blur with sigma = (pitch_x + pitch_y) / 8,
// Sobel second derivatives, S = max(Ixy^2 - Ixx * Iyy, 0), normalised to
// [0, 1] (all-zero when the peak response is below 1e-12).
ScalarImage saddle_response(const ScalarImage& rectified, double pitch_x, double pitch_y);

// Refines each nominal lattice node g(r,c) = ((c+1) px, (r+1) py) by mean
// shift over a rectangular window of size px/2 x py/2. A node survives when
// the walk converges, the interpolated response there exceeds the threshold,
// and the displacement from nominal stays within half a pitch per axis.
CornerGrid mean_shift_corners(const ScalarImage& response, const BoardSpec& spec, double pitch_x,
                              double pitch_y, const DetectorConfig& cfg = {});

// Scores the grid on L-triples (node, right neighbour, down neighbour):
// triangle areas must be uniform (CV < cv_max), match the expected
// pitch_x * pitch_y / 2 (ratio inside [ratio_min, ratio_max]), and no missing
// node may have a missing right or down neighbour. Fewer than min_triples
// valid triples rejects with cv_area = +inf.
GateReport quality_gate(const CornerGrid& grid, double pitch_x, double pitch_y,
                        const DetectorConfig& cfg = {});

// Maps rectified-space corners back to the native frame through h^-1 after
// undoing the kappa upsample. Nodes landing more than 1 px outside the native
// image bounds are dropped.
CornerGrid project_to_original(const CornerGrid& grid, const Homography& h, double kappa,
                               int native_w, int native_h);

struct DetectionResult {
  CornerGrid grid;
  GateReport report;
};

// Full pipeline on a raw thermal frame. Both threshold polarities are tried;
// the first accepted result wins (bright preferred), otherwise the first that
// completes. Throws DetectionFailed with the stage name when no polarity
// produces a grid at all.
DetectionResult detect_corners(const ScalarImage& raw, const BoardSpec& spec,
                               const DetectorConfig& cfg = {});

// Like detect_corners but with access to intermediate stages, for debug dumps.
struct DetectionDebug {
  ScalarImage normalised;
  ScalarImage mask;
  Rectified rect;
  ScalarImage response;
  QuadROI roi;
};
DetectionResult detect_corners_debug(const ScalarImage& raw, const BoardSpec& spec,
                                     const DetectorConfig& cfg, DetectionDebug* debug);

}  // namespace tcal
