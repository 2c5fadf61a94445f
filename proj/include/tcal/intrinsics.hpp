#pragma once

#include <string>
#include <vector>

#include "tcal/camera.hpp"
#include "tcal/config.hpp"
#include "tcal/geometry.hpp"

namespace tcal {

// One planar calibration view: observed pixels and board-frame object points.
struct CalibrationView {
  std::string frame_id;
  std::vector<Point2> image_points;
  std::vector<Point3> object_points;  // z must be 0 (planar target)
};

struct IntrinsicsResult {
  CameraModel camera;
  std::vector<BoardPose> poses;      // one per view, same order
  double rms = 0.0;                  // sqrt(mean squared residual per coordinate)
  std::vector<double> per_view_rms;
  int iterations = 0;
  bool converged = true;
  std::vector<double> cost_history;  // accepted LM costs, non-increasing
  bool conditioning_warning = false; // |k2| > 5 suggests an overfitted radial term
};

// Planar calibration: closed-form initialisation from per-view homographies
// followed by joint refinement of the unfrozen camera parameters and all
// poses. `preset` supplies the frozen-coefficient mask, the values frozen
// parameters keep, and the image size. Needs >= 3 views of >= 4 points each;
// throws DegenerateViews when the closed-form system is unsolvable (e.g.
// views with nearly identical orientation).
IntrinsicsResult calibrate_intrinsics(const std::vector<CalibrationView>& views,
                                      const CameraModel& preset, const LmConfig& lm = {});

}  // namespace tcal
