#pragma once

#include <string>
#include <vector>

#include "tcal/board.hpp"
#include "tcal/geometry.hpp"

namespace tcal {

// Planar object points for the interior corner lattice: node (r, c) sits at
// (c * s, r * s, 0) in board coordinates, row-major.
std::vector<Point3> object_grid(const BoardSpec& spec);
Point3 object_point(const BoardSpec& spec, int r, int c);

// One detected corner of the dense visible-light lattice. (x_idx, y_idx)
// index the interior corners of the double-density pattern displayed on the
// same screen area: 2 * squares_x columns by 2 * squares_y rows of half-size
// cells, so the interior lattice is (2*Sx - 1) x (2*Sy - 1).
struct RGBCorner {
  int x_idx = 0;
  int y_idx = 0;
  Point2 point = Point2::Zero();
};

struct RGBCornerSet {
  std::string frame_id;
  std::vector<RGBCorner> corners;
};

// Keeps only the dense-lattice corners that coincide physically with thermal
// checkerboard corners: x_rgb = 2 * x_tir + 1, y_rgb = 2 * y_tir + 1. The
// result is a CornerGrid on the thermal lattice ((Sx-1) x (Sy-1)).
CornerGrid subsample_rgb(const RGBCornerSet& set, const BoardSpec& spec);

// One calibration view: per-node pixel observations in both modalities plus
// the shared board-frame object point, all index-aligned.
struct MatchedView {
  std::string frame_id;
  std::vector<int> node_r, node_c;
  std::vector<Point2> rgb_points;
  std::vector<Point2> tir_points;
  std::vector<Point3> object_points;
  size_t size() const { return object_points.size(); }
};

// Joins RGB corner sets and thermal detections on frame_id. Thermal frames
// that failed the quality gate are dropped (accepted flags run parallel to
// tir_grids); views keep only nodes seen by both cameras and need at least
// min_pairs of them. Output is ordered by frame_id. Throws NoViews when
// nothing survives.
std::vector<MatchedView> pair_frames(const std::vector<RGBCornerSet>& rgb_sets,
                                     const std::vector<CornerGrid>& tir_grids,
                                     const std::vector<bool>& tir_accepted,
                                     const BoardSpec& spec, int min_pairs = 8);

}  // namespace tcal
