#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "tcal/errors.hpp"
#include "tcal/geometry.hpp"

namespace tcal {

// Checkerboard geometry: squares_x x squares_y cells of square_size metres.
// The interior corner lattice is (squares_x - 1) x (squares_y - 1).
struct BoardSpec {
  int squares_x = 8;
  int squares_y = 4;
  double square_size = 0.1125;

  void validate() const {
    if (squares_x < 3 || squares_y < 3)
      throw ValidationError("board: need at least 3x3 squares");
    if (!(square_size > 0.0)) throw ValidationError("board: square_size must be positive");
  }
  int corner_cols() const { return squares_x - 1; }
  int corner_rows() const { return squares_y - 1; }
};

// Interior corner lattice with per-node presence. Row r, column c maps to
// nodes[r * cols + c]; absent nodes simply failed detection.
struct CornerGrid {
  int rows = 0;
  int cols = 0;
  std::vector<std::optional<Point2>> nodes;
  std::string frame_id;

  CornerGrid() = default;
  CornerGrid(int r, int c) : rows(r), cols(c), nodes(static_cast<size_t>(r) * c) {}

  std::optional<Point2>& at(int r, int c) { return nodes[static_cast<size_t>(r) * cols + c]; }
  const std::optional<Point2>& at(int r, int c) const {
    return nodes[static_cast<size_t>(r) * cols + c];
  }
  int present_count() const {
    int n = 0;
    for (const auto& p : nodes) n += p.has_value() ? 1 : 0;
    return n;
  }
};

// Board region in the native thermal frame: corners ordered top-left,
// top-right, bottom-right, bottom-left; pitch is the per-axis square size in
// pixels estimated from the quad side lengths.
struct QuadROI {
  std::array<Point2, 4> corners;
  double pitch_x = 0.0;
  double pitch_y = 0.0;
};

// Geometric consistency verdict for a detected grid.
struct GateReport {
  double cv_area = 0.0;        // coefficient of variation of L-triple areas
  double area_ratio = 0.0;     // mean area / expected area from the pitch
  bool adjacent_missing = false;
  bool accepted = false;
  int n_detected = 0;
  std::string polarity = "bright";  // which threshold side produced the quad
};

}  // namespace tcal
