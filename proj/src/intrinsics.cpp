#include "tcal/intrinsics.hpp"

#include <cmath>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "tcal/errors.hpp"
#include "tcal/lm.hpp"

namespace tcal {

namespace {

Homography view_homography(const CalibrationView& view) {
  std::vector<Point2> obj;
  obj.reserve(view.object_points.size());
  for (const auto& p : view.object_points) {
    if (std::abs(p.z()) > 1e-9) throw ValidationError("calibrate: object points must be planar");
    obj.push_back({p.x(), p.y()});
  }
  return homography_from_points(obj, view.image_points);
}

// Zhang's closed-form intrinsics from homography constraints on the image of
// the absolute conic, b = (B11, B12, B22, B13, B23, B33).
Eigen::Matrix<double, 6, 1> conic_row(const Mat3& h, int i, int j) {
  Eigen::Matrix<double, 6, 1> v;
  v << h(0, i) * h(0, j), h(0, i) * h(1, j) + h(1, i) * h(0, j), h(1, i) * h(1, j),
      h(2, i) * h(0, j) + h(0, i) * h(2, j), h(2, i) * h(1, j) + h(1, i) * h(2, j),
      h(2, i) * h(2, j);
  return v;
}

CameraModel closed_form_intrinsics(const std::vector<Homography>& hs, const CameraModel& preset) {
  Eigen::MatrixXd v(2 * hs.size(), 6);
  for (size_t k = 0; k < hs.size(); ++k) {
    v.row(2 * k) = conic_row(hs[k].m, 0, 1).transpose();
    v.row(2 * k + 1) = (conic_row(hs[k].m, 0, 0) - conic_row(hs[k].m, 1, 1)).transpose();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(v, Eigen::ComputeFullV);
  Eigen::VectorXd b = svd.matrixV().col(5);
  if (b(0) < 0.0) b = -b;

  const double b11 = b(0), b12 = b(1), b22 = b(2), b13 = b(3), b23 = b(4), b33 = b(5);
  const double denom = b11 * b22 - b12 * b12;
  if (!(b11 > 0.0) || !(denom > 0.0))
    throw DegenerateViews("closed-form conic is not positive definite");
  const double v0 = (b12 * b13 - b11 * b23) / denom;
  const double lambda = b33 - (b13 * b13 + v0 * (b12 * b13 - b11 * b23)) / b11;
  if (!(lambda > 0.0) || !(lambda / b11 > 0.0))
    throw DegenerateViews("closed-form focal length is not real");
  const double alpha = std::sqrt(lambda / b11);
  const double beta = std::sqrt(lambda * b11 / denom);
  const double gamma = -b12 * alpha * alpha * beta / lambda;
  const double u0 = gamma * v0 / beta - b13 * alpha * alpha / lambda;

  // Frozen parameters keep the preset's values (zero distortion in both
  // presets); free ones take the closed-form estimate.
  CameraModel cam = preset;
  if (!cam.fixed[0]) cam.fx = alpha;
  if (!cam.fixed[1]) cam.fy = cam.fy_equals_fx ? cam.fx : beta;
  if (!cam.fixed[2]) cam.cx = u0;
  if (!cam.fixed[3]) cam.cy = v0;
  if (!std::isfinite(cam.fx) || !std::isfinite(cam.fy) || !std::isfinite(cam.cx) ||
      !std::isfinite(cam.cy))
    throw DegenerateViews("closed-form intrinsics are not finite");
  return cam;
}

// Pose from a plane homography given intrinsics: H ~ K [r1 r2 t].
BoardPose pose_from_homography(const Homography& h, const CameraModel& cam) {
  Mat3 k;
  k << cam.fx, 0, cam.cx, 0, cam.fy, cam.cy, 0, 0, 1;
  const Mat3 a = k.inverse() * h.m;
  double lambda = 2.0 / (a.col(0).norm() + a.col(1).norm());
  if (a.col(2).z() * lambda < 0.0) lambda = -lambda;  // board must sit in front
  Vec3 r1 = lambda * a.col(0);
  Vec3 r2 = lambda * a.col(1);
  Mat3 r_approx;
  r_approx.col(0) = r1;
  r_approx.col(1) = r2;
  r_approx.col(2) = r1.cross(r2);
  Eigen::JacobiSVD<Mat3> svd(r_approx, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Mat3 u = svd.matrixU();
    u.col(2) *= -1.0;
    r = u * svd.matrixV().transpose();
  }
  BoardPose pose;
  pose.rvec = rodrigues_inv(r);
  pose.tvec = lambda * a.col(2);
  return pose;
}

// Free-parameter bookkeeping: camera parameters honour the frozen mask and
// the fy = fx tie; every view contributes rvec (3) + tvec (3).
struct ParamLayout {
  std::vector<int> cam_indices;  // indices into CameraModel::param order
  int pose_offset = 0;
  int n_views = 0;
  int total = 0;
};

ParamLayout make_layout(const CameraModel& preset, int n_views) {
  ParamLayout layout;
  for (int i = 0; i < 9; ++i) {
    if (preset.fixed[i]) continue;
    if (i == 1 && preset.fy_equals_fx) continue;  // fy rides along with fx
    layout.cam_indices.push_back(i);
  }
  layout.pose_offset = static_cast<int>(layout.cam_indices.size());
  layout.n_views = n_views;
  layout.total = layout.pose_offset + 6 * n_views;
  return layout;
}

Eigen::VectorXd pack(const ParamLayout& layout, const CameraModel& cam,
                     const std::vector<BoardPose>& poses) {
  Eigen::VectorXd x(layout.total);
  for (size_t i = 0; i < layout.cam_indices.size(); ++i) x[i] = cam.param(layout.cam_indices[i]);
  for (int v = 0; v < layout.n_views; ++v) {
    x.segment<3>(layout.pose_offset + 6 * v) = poses[v].rvec;
    x.segment<3>(layout.pose_offset + 6 * v + 3) = poses[v].tvec;
  }
  return x;
}

void unpack(const ParamLayout& layout, const Eigen::VectorXd& x, CameraModel& cam,
            std::vector<BoardPose>& poses) {
  for (size_t i = 0; i < layout.cam_indices.size(); ++i)
    cam.set_param(layout.cam_indices[i], x[i]);
  if (cam.fy_equals_fx && !cam.fixed[0]) cam.fy = cam.fx;
  poses.resize(layout.n_views);
  for (int v = 0; v < layout.n_views; ++v) {
    poses[v].rvec = x.segment<3>(layout.pose_offset + 6 * v);
    poses[v].tvec = x.segment<3>(layout.pose_offset + 6 * v + 3);
  }
}

}  // namespace

IntrinsicsResult calibrate_intrinsics(const std::vector<CalibrationView>& views,
                                      const CameraModel& preset, const LmConfig& lm) {
  if (views.size() < 3)
    throw DegenerateViews("need >= 3 views, got " + std::to_string(views.size()));
  for (const auto& v : views) {
    if (v.image_points.size() != v.object_points.size())
      throw ValidationError("calibrate: point count mismatch in view " + v.frame_id);
    if (v.image_points.size() < 4)
      throw ValidationError("calibrate: view " + v.frame_id + " has fewer than 4 points");
  }

  std::vector<Homography> hs;
  hs.reserve(views.size());
  for (const auto& v : views) hs.push_back(view_homography(v));

  CameraModel cam = closed_form_intrinsics(hs, preset);
  std::vector<BoardPose> poses;
  poses.reserve(views.size());
  for (size_t i = 0; i < views.size(); ++i) poses.push_back(pose_from_homography(hs[i], cam));

  const ParamLayout layout = make_layout(preset, static_cast<int>(views.size()));

  size_t total_points = 0;
  for (const auto& v : views) total_points += v.image_points.size();

  auto residuals = [&views, &layout, preset](const Eigen::VectorXd& x) {
    CameraModel cam_x = preset;  // frozen entries keep the preset's values
    std::vector<BoardPose> poses_x;
    unpack(layout, x, cam_x, poses_x);
    size_t n = 0;
    for (const auto& v : views) n += v.image_points.size();
    Eigen::VectorXd r(2 * n);
    size_t row = 0;
    for (size_t vi = 0; vi < views.size(); ++vi) {
      const std::vector<Point2> proj = project_points(cam_x, poses_x[vi], views[vi].object_points);
      for (size_t j = 0; j < proj.size(); ++j) {
        r[2 * row] = views[vi].image_points[j].x() - proj[j].x();
        r[2 * row + 1] = views[vi].image_points[j].y() - proj[j].y();
        ++row;
      }
    }
    return r;
  };

  Eigen::VectorXd steps(layout.total);
  for (size_t i = 0; i < layout.cam_indices.size(); ++i)
    steps[i] = layout.cam_indices[i] <= 3 ? 1e-4 : 1e-6;  // px-scale vs distortion terms
  for (int v = 0; v < layout.n_views; ++v) {
    steps.segment<3>(layout.pose_offset + 6 * v).setConstant(1e-7);
    steps.segment<3>(layout.pose_offset + 6 * v + 3).setConstant(1e-6);
  }

  LmOptions opts;
  opts.max_iters = lm.max_iters_intrinsics;
  opts.rel_cost_tol = lm.rel_cost_tol_intrinsics;
  opts.lambda_init = lm.lambda_init;
  opts.lambda_up = lm.lambda_up;
  opts.lambda_down = lm.lambda_down;

  const LmResult sol = lm_solve(residuals, pack(layout, cam, poses), steps, opts);

  IntrinsicsResult out;
  out.camera = preset;
  unpack(layout, sol.x, out.camera, out.poses);
  for (auto& pose : out.poses) pose.rvec = canonical_rvec(pose.rvec);
  out.iterations = sol.iterations;
  out.converged = sol.converged;
  out.cost_history = sol.cost_history;
  out.rms = std::sqrt(sol.cost / (2.0 * static_cast<double>(total_points)));
  out.conditioning_warning = std::abs(out.camera.k2) > 5.0;

  for (size_t vi = 0; vi < views.size(); ++vi) {
    const std::vector<Point2> proj =
        project_points(out.camera, out.poses[vi], views[vi].object_points);
    double acc = 0.0;
    for (size_t j = 0; j < proj.size(); ++j)
      acc += (views[vi].image_points[j] - proj[j]).squaredNorm();
    out.per_view_rms.push_back(std::sqrt(acc / (2.0 * static_cast<double>(proj.size()))));
  }
  return out;
}

}  // namespace tcal
