#pragma once

#include <array>
#include <vector>

#include "tcal/geometry.hpp"

namespace tcal {

// Pinhole model with radial (k1, k2, k3) and tangential (p1, p2) distortion.
// fixed[i] freezes a coefficient during calibration; the order matches
// param_names(): fx, fy, cx, cy, k1, k2, p1, p2, k3 (distortion in the usual
// serialisation order k1 k2 p1 p2 k3). fy_equals_fx ties fy to fx as a single
// focal parameter.
struct CameraModel {
  double fx = 1.0, fy = 1.0, cx = 0.0, cy = 0.0;
  double k1 = 0.0, k2 = 0.0, p1 = 0.0, p2 = 0.0, k3 = 0.0;
  std::array<bool, 9> fixed{};
  bool fy_equals_fx = false;
  int width = 0, height = 0;

  static constexpr std::array<const char*, 9> param_names() {
    return {"fx", "fy", "cx", "cy", "k1", "k2", "p1", "p2", "k3"};
  }
  double param(int i) const;
  void set_param(int i, double v);

  // Thermal preset: both focals free, k1 and k2 free, k3/p1/p2 frozen at zero.
  static CameraModel tir_preset(int width, int height);
  // Visible-light preset: distortion frozen at zero, fy tied to fx.
  static CameraModel rgb_preset(int width, int height);
};

// Board-to-camera rigid transform, rotation as an axis-angle vector with
// norm < pi.
struct BoardPose {
  Vec3 rvec = Vec3::Zero();
  Vec3 tvec = Vec3::Zero();
};

// Axis-angle to rotation matrix and back. rodrigues_inv validates that the
// input is a proper rotation (orthonormal, det +1) and returns norm <= pi.
Mat3 rodrigues(const Vec3& rvec);
Vec3 rodrigues_inv(const Mat3& r);

// Wraps an axis-angle vector into the open ball of radius pi.
Vec3 canonical_rvec(Vec3 rvec);

// Applies distortion to normalised coordinates (x, y) = (X/Z, Y/Z).
Point2 distort_normalised(const CameraModel& cam, const Point2& n);

// Projects camera-frame points; throws BehindCamera when Z <= 1e-9.
Point2 project_point(const CameraModel& cam, const Vec3& p_cam);

// Projects board-frame points through a pose.
std::vector<Point2> project_points(const CameraModel& cam, const BoardPose& pose,
                                   const std::vector<Point3>& object_points);

// Inverts the distortion by fixed-point iteration (20 iterations or step
// below 1e-8) and reprojects through the distortion-free pinhole. Throws
// NoConvergence outside the invertible region.
Point2 undistort_point(const CameraModel& cam, const Point2& pixel);
std::vector<Point2> undistort_points(const CameraModel& cam, const std::vector<Point2>& pixels);

// Pixel -> undistorted normalised coordinates (x', y').
Point2 undistorted_normalised(const CameraModel& cam, const Point2& pixel);

}  // namespace tcal
