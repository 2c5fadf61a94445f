#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tcal/camera.hpp"
#include "tcal/config.hpp"
#include "tcal/targets.hpp"

namespace tcal {

// Rigid transform from the RGB camera frame to the TIR camera frame:
// X_tir = R * X_rgb + T.
struct StereoExtrinsics {
  Vec3 rvec = Vec3::Zero();
  Vec3 tvec = Vec3::Zero();
  double baseline() const { return tvec.norm(); }
  double rotation_deg() const { return rvec.norm() * 180.0 / M_PI; }
};

// Pose of a planar target from one view: homography decomposition
// (H ~ K [r1 r2 t], SVD orthonormalisation, board in front of the camera)
// refined by pose-only Levenberg-Marquardt on pixel residuals.
BoardPose pnp_planar(const CameraModel& cam, const std::vector<Point3>& object_points,
                     const std::vector<Point2>& image_points, const LmConfig& lm = {});

// Residuals of the joint two-camera objective in a fixed order: views in
// input order, per view the RGB block then the TIR block, nodes ascending,
// (du, dv) per point. RGB projects through the per-view pose alone; TIR
// through the stereo transform composed with it, so RGB residuals are
// independent of (R, T).
Eigen::VectorXd stereo_residuals(const std::vector<MatchedView>& views, const CameraModel& k_rgb,
                                 const CameraModel& k_tir, const StereoExtrinsics& stereo,
                                 const std::vector<BoardPose>& poses);
double stereo_cost(const std::vector<MatchedView>& views, const CameraModel& k_rgb,
                   const CameraModel& k_tir, const StereoExtrinsics& stereo,
                   const std::vector<BoardPose>& poses);

struct RmsMetrics {
  double rms_rgb = 0.0;
  double rms_tir = 0.0;
  double rms_total = 0.0;                  // sqrt(cost / (2 * sum of view sizes))
  std::vector<double> per_view_rgb;        // per-view RMS of residual norms
  std::vector<double> per_view_tir;
};

// Pools per-view, per-modality reprojection statistics: per view
// e = sqrt(sum ||r||^2 / n); per modality sqrt(sum e^2 n / sum n); total
// treats every observation (2 per matched node) as one point.
RmsMetrics rms_metrics(const Eigen::VectorXd& residuals, const std::vector<int>& view_sizes);

struct StereoReport {
  StereoExtrinsics extrinsics;
  std::vector<BoardPose> poses;
  RmsMetrics rms;
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;
  std::optional<double> tz_fixed;          // set iff T_z was held at this value
  std::vector<double> cost_history;
  std::vector<int> view_sizes;
  std::vector<std::string> frame_ids;
};

// Joint refinement of the stereo transform and all board poses with
// intrinsics held fixed. When fix_tz is set, T_z is excluded from the state
// entirely and reported bit-exactly at that value. Jacobians use central
// finite differences (1e-7 rotation, 1e-6 m translation) and exploit the
// per-view block structure of the problem.
StereoReport bundle_adjust(const std::vector<MatchedView>& views, const CameraModel& k_rgb,
                           const CameraModel& k_tir, const StereoExtrinsics& init_stereo,
                           const std::vector<BoardPose>& init_poses, std::optional<double> fix_tz,
                           const LmConfig& lm = {});

// Initial stereo estimate: per-view plane poses in both cameras, relative
// rotations averaged via the quaternion mean, translation by component-wise
// median.
struct StereoInit {
  StereoExtrinsics stereo;
  std::vector<BoardPose> rgb_poses;
};
StereoInit init_stereo_from_views(const std::vector<MatchedView>& views, const CameraModel& k_rgb,
                                  const CameraModel& k_tir, const LmConfig& lm = {});

// Full-state (6-DoF translation) run used as the comparison column and as the
// warm start for the constrained solve.
StereoReport unconstrained_reference(const std::vector<MatchedView>& views,
                                     const CameraModel& k_rgb, const CameraModel& k_tir,
                                     const LmConfig& lm = {});

// Pipeline entry point: unconstrained first, then, when fix_tz is given, a
// constrained solve warm-started from it. Returns the final report (and the
// warm-start report through `reference` when requested).
StereoReport solve_stereo(const std::vector<MatchedView>& views, const CameraModel& k_rgb,
                          const CameraModel& k_tir, std::optional<double> fix_tz,
                          const LmConfig& lm = {}, StereoReport* reference = nullptr);

}  // namespace tcal
