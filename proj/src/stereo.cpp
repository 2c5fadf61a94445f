#include "tcal/stereo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "tcal/errors.hpp"
#include "tcal/lm.hpp"

namespace tcal {
namespace {

void check_views(const std::vector<MatchedView>& views) {
  if (views.empty()) throw NoViews("stereo solver has no matched views");
  for (const auto& v : views) {
    if (v.rgb_points.size() != v.object_points.size() ||
        v.tir_points.size() != v.object_points.size())
      throw ValidationError("matched view " + v.frame_id + " has inconsistent point counts");
    if (v.object_points.size() < 4)
      throw DegeneratePoints("matched view " + v.frame_id + " has fewer than 4 points");
  }
}

// Residual block of one view: RGB rows first, then TIR, (du, dv) per node in
// stored order. The TIR chain composes the stereo transform with the board
// pose, so the RGB rows never depend on (r_s, t_s).
Eigen::VectorXd view_residuals(const MatchedView& v, const CameraModel& k_rgb,
                               const CameraModel& k_tir, const Mat3& r_s, const Vec3& t_s,
                               const BoardPose& pose) {
  const Mat3 r_pose = rodrigues(pose.rvec);
  const int n = static_cast<int>(v.object_points.size());
  Eigen::VectorXd r(4 * n);
  for (int j = 0; j < n; ++j) {
    try {
      const Vec3 p_rgb = r_pose * v.object_points[j] + pose.tvec;
      const Point2 proj_rgb = project_point(k_rgb, p_rgb);
      r[2 * j] = v.rgb_points[j].x() - proj_rgb.x();
      r[2 * j + 1] = v.rgb_points[j].y() - proj_rgb.y();
      const Vec3 p_tir = r_s * p_rgb + t_s;
      const Point2 proj_tir = project_point(k_tir, p_tir);
      r[2 * n + 2 * j] = v.tir_points[j].x() - proj_tir.x();
      r[2 * n + 2 * j + 1] = v.tir_points[j].y() - proj_tir.y();
    } catch (const BehindCamera& e) {
      throw BehindCamera("view " + v.frame_id + " node (" + std::to_string(v.node_r[j]) + ", " +
                         std::to_string(v.node_c[j]) + "): " + e.what());
    }
  }
  return r;
}

// State layout: [stereo rvec (3), T_x, T_y, (T_z unless pinned)] then 6 per
// view. With T_z pinned the stereo block has 5 entries and the pinned value
// never enters the optimiser at all.
struct StateLayout {
  std::optional<double> fix_tz;
  int n_views = 0;
  int stereo_dim() const { return fix_tz ? 5 : 6; }
  int total() const { return stereo_dim() + 6 * n_views; }
};

Eigen::VectorXd pack_state(const StateLayout& layout, const StereoExtrinsics& s,
                           const std::vector<BoardPose>& poses) {
  Eigen::VectorXd x(layout.total());
  x.segment<3>(0) = s.rvec;
  x[3] = s.tvec.x();
  x[4] = s.tvec.y();
  if (!layout.fix_tz) x[5] = s.tvec.z();
  for (int i = 0; i < layout.n_views; ++i) {
    x.segment<3>(layout.stereo_dim() + 6 * i) = poses[i].rvec;
    x.segment<3>(layout.stereo_dim() + 6 * i + 3) = poses[i].tvec;
  }
  return x;
}

void unpack_state(const StateLayout& layout, const Eigen::VectorXd& x, StereoExtrinsics& s,
                  std::vector<BoardPose>& poses) {
  s.rvec = x.segment<3>(0);
  s.tvec.x() = x[3];
  s.tvec.y() = x[4];
  s.tvec.z() = layout.fix_tz ? *layout.fix_tz : x[5];
  poses.resize(layout.n_views);
  for (int i = 0; i < layout.n_views; ++i) {
    poses[i].rvec = x.segment<3>(layout.stereo_dim() + 6 * i);
    poses[i].tvec = x.segment<3>(layout.stereo_dim() + 6 * i + 3);
  }
}

// Finite-difference step per state entry: 1e-7 for rotation components,
// 1e-6 m for translations.
double fd_step_for(const StateLayout& layout, int param) {
  if (param < 3) return 1e-7;
  if (param < layout.stereo_dim()) return 1e-6;
  const int within = (param - layout.stereo_dim()) % 6;
  return within < 3 ? 1e-7 : 1e-6;
}

struct Problem {
  const std::vector<MatchedView>* views;
  const CameraModel* k_rgb;
  const CameraModel* k_tir;
  StateLayout layout;

  Eigen::VectorXd eval_view(const Eigen::VectorXd& x, int vi) const {
    StereoExtrinsics s;
    std::vector<BoardPose> poses;
    unpack_state(layout, x, s, poses);
    return view_residuals((*views)[vi], *k_rgb, *k_tir, rodrigues(s.rvec), s.tvec, poses[vi]);
  }

  Eigen::VectorXd eval_full(const Eigen::VectorXd& x) const {
    StereoExtrinsics s;
    std::vector<BoardPose> poses;
    unpack_state(layout, x, s, poses);
    const Mat3 r_s = rodrigues(s.rvec);
    size_t total = 0;
    for (const auto& v : *views) total += 4 * v.object_points.size();
    Eigen::VectorXd r(total);
    size_t row = 0;
    for (size_t i = 0; i < views->size(); ++i) {
      const Eigen::VectorXd block =
          view_residuals((*views)[i], *k_rgb, *k_tir, r_s, s.tvec, poses[i]);
      r.segment(row, block.size()) = block;
      row += block.size();
    }
    return r;
  }
};

// Central difference of one view block with the one-sided fallback mirroring
// fd_column.
Eigen::VectorXd fd_view_column(const Problem& prob, const Eigen::VectorXd& x, int vi, int param,
                               double step) {
  Eigen::VectorXd xp = x, xm = x;
  xp[param] += step;
  xm[param] -= step;
  try {
    return (prob.eval_view(xp, vi) - prob.eval_view(xm, vi)) / (2.0 * step);
  } catch (const NumericalError&) {
    const Eigen::VectorXd r0 = prob.eval_view(x, vi);
    try {
      return (prob.eval_view(xp, vi) - r0) / step;
    } catch (const NumericalError&) {
      return (r0 - prob.eval_view(xm, vi)) / step;
    }
  }
}

struct SolveOutput {
  Eigen::VectorXd x;
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> cost_history;
};

// Levenberg-Marquardt with the same acceptance and damping policy as
// lm_solve, but with the Jacobian and normal equations assembled from the
// per-view block structure: stereo parameters touch every view's block, each
// pose touches only its own.
SolveOutput solve_structured(const Problem& prob, Eigen::VectorXd x0, const LmConfig& lm) {
  const int ns = prob.layout.stereo_dim();
  const int n_views = prob.layout.n_views;
  const int dim = prob.layout.total();

  SolveOutput out;
  Eigen::VectorXd r = prob.eval_full(x0);
  double cost = r.squaredNorm();
  out.cost_history.push_back(cost);
  double lambda = lm.lambda_init;

  for (int iter = 0; iter < lm.max_iters_stereo; ++iter) {
    out.iterations = iter + 1;

    Eigen::MatrixXd jtj = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
    size_t row = 0;
    for (int vi = 0; vi < n_views; ++vi) {
      const int rows = 4 * static_cast<int>((*prob.views)[vi].object_points.size());
      Eigen::MatrixXd a(rows, ns);      // d block / d stereo params
      Eigen::MatrixXd b(rows, 6);       // d block / d pose_vi
      for (int p = 0; p < ns; ++p) a.col(p) = fd_view_column(prob, x0, vi, p, fd_step_for(prob.layout, p));
      for (int p = 0; p < 6; ++p) {
        const int col = ns + 6 * vi + p;
        b.col(p) = fd_view_column(prob, x0, vi, col, fd_step_for(prob.layout, col));
      }
      const Eigen::VectorXd rv = r.segment(row, rows);
      jtj.topLeftCorner(ns, ns) += a.transpose() * a;
      jtj.block(0, ns + 6 * vi, ns, 6) = a.transpose() * b;
      jtj.block(ns + 6 * vi, 0, 6, ns) = jtj.block(0, ns + 6 * vi, ns, 6).transpose();
      jtj.block(ns + 6 * vi, ns + 6 * vi, 6, 6) = b.transpose() * b;
      g.segment(0, ns) += a.transpose() * rv;
      g.segment(ns + 6 * vi, 6) = b.transpose() * rv;
      row += rows;
    }
    if (!jtj.allFinite() || !g.allFinite())
      throw SingularNormalEquations("non-finite normal equations in the stereo solver");

    if (lm.grad_tol_stereo > 0.0 && g.lpNorm<Eigen::Infinity>() < lm.grad_tol_stereo) {
      out.converged = true;
      break;
    }

    bool accepted = false;
    bool hit_tol = false;
    for (int attempt = 0; attempt < 25; ++attempt) {
      Eigen::MatrixXd damped = jtj;
      for (int i = 0; i < dim; ++i) damped(i, i) += lambda * std::max(jtj(i, i), 1e-12);
      const Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
      if (ldlt.info() != Eigen::Success) {
        lambda *= lm.lambda_up;
        continue;
      }
      const Eigen::VectorXd delta = ldlt.solve(-g);
      if (!delta.allFinite()) {
        lambda *= lm.lambda_up;
        continue;
      }

      const Eigen::VectorXd x_try = x0 + delta;
      double cost_try = std::numeric_limits<double>::infinity();
      Eigen::VectorXd r_try;
      try {
        r_try = prob.eval_full(x_try);
        cost_try = r_try.squaredNorm();
      } catch (const NumericalError&) {
        // Step left the valid domain; rejected.
      }

      if (cost_try < cost) {
        const double rel_drop = (cost - cost_try) / std::max(cost, 1e-300);
        x0 = x_try;
        r = std::move(r_try);
        cost = cost_try;
        out.cost_history.push_back(cost);
        lambda = std::max(lambda * lm.lambda_down, 1e-12);
        accepted = true;
        if (rel_drop < lm.rel_cost_tol_stereo) hit_tol = true;
        break;
      }
      lambda *= lm.lambda_up;
      if (lambda > 1e16) break;
    }

    if (!accepted) {
      out.converged = cost < 1e-24 || g.lpNorm<Eigen::Infinity>() <= 1e-8 * (1.0 + cost);
      break;
    }
    if (hit_tol) {
      out.converged = true;
      break;
    }
  }

  out.x = std::move(x0);
  out.cost = cost;
  return out;
}

StereoReport run_bundle(const std::vector<MatchedView>& views, const CameraModel& k_rgb,
                        const CameraModel& k_tir, const StereoExtrinsics& init_stereo,
                        const std::vector<BoardPose>& init_poses, std::optional<double> fix_tz,
                        const LmConfig& lm) {
  check_views(views);
  if (views.size() < 2) throw DegenerateViews("stereo bundle adjustment needs at least 2 views");
  if (init_poses.size() != views.size())
    throw ValidationError("bundle_adjust: one initial pose per view required");

  Problem prob{&views, &k_rgb, &k_tir, StateLayout{fix_tz, static_cast<int>(views.size())}};

  StereoExtrinsics start = init_stereo;
  if (fix_tz) start.tvec.z() = *fix_tz;
  const Eigen::VectorXd x0 = pack_state(prob.layout, start, init_poses);
  SolveOutput sol = solve_structured(prob, x0, lm);

  StereoReport report;
  unpack_state(prob.layout, sol.x, report.extrinsics, report.poses);
  report.extrinsics.rvec = canonical_rvec(report.extrinsics.rvec);
  for (auto& p : report.poses) p.rvec = canonical_rvec(p.rvec);
  report.iterations = sol.iterations;
  report.converged = sol.converged;
  report.tz_fixed = fix_tz;
  report.cost_history = std::move(sol.cost_history);
  for (const auto& v : views) {
    report.view_sizes.push_back(static_cast<int>(v.object_points.size()));
    report.frame_ids.push_back(v.frame_id);
  }
  // Cost and metrics come from one final evaluation at the canonicalised
  // state so they agree exactly.
  const Eigen::VectorXd final_r =
      stereo_residuals(views, k_rgb, k_tir, report.extrinsics, report.poses);
  report.cost = final_r.squaredNorm();
  report.rms = rms_metrics(final_r, report.view_sizes);
  return report;
}

}  // namespace

BoardPose pnp_planar(const CameraModel& cam, const std::vector<Point3>& object_points,
                     const std::vector<Point2>& image_points, const LmConfig& lm) {
  if (object_points.size() != image_points.size())
    throw ValidationError("pnp_planar: point count mismatch");
  const int n = static_cast<int>(object_points.size());
  if (n < 4) throw DegeneratePoints("pnp_planar needs at least 4 points");
  for (const auto& p : object_points)
    if (std::abs(p.z()) > 1e-9)
      throw ValidationError("pnp_planar expects board points in their z = 0 plane");

  // Collinear boards leave the homography rank-deficient; test the planar
  // spread through the eigenvalues of the XY scatter.
  Point2 mean = Point2::Zero();
  for (const auto& p : object_points) mean += Point2(p.x(), p.y());
  mean /= n;
  Eigen::Matrix2d scatter = Eigen::Matrix2d::Zero();
  for (const auto& p : object_points) {
    const Point2 d = Point2(p.x(), p.y()) - mean;
    scatter += d * d.transpose();
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(scatter);
  if (eig.eigenvalues()(0) <= 1e-12 * std::max(eig.eigenvalues()(1), 1e-300))
    throw DegeneratePoints("pnp_planar: object points are collinear");

  // Homography from board XY to undistorted normalised coordinates, then the
  // standard planar decomposition.
  std::vector<Point2> src(n), dst(n);
  for (int i = 0; i < n; ++i) {
    src[i] = Point2(object_points[i].x(), object_points[i].y());
    dst[i] = undistorted_normalised(cam, image_points[i]);
  }
  const Homography h = homography_from_points(src, dst);

  double lambda = 2.0 / (h.m.col(0).norm() + h.m.col(1).norm());
  if (h.m.col(2).z() * lambda < 0.0) lambda = -lambda;  // board in front of the camera
  Mat3 r_approx;
  r_approx.col(0) = lambda * h.m.col(0);
  r_approx.col(1) = lambda * h.m.col(1);
  r_approx.col(2) = r_approx.col(0).cross(r_approx.col(1));
  Eigen::JacobiSVD<Mat3> svd(r_approx, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Mat3 u = svd.matrixU();
    u.col(2) *= -1.0;
    r = u * svd.matrixV().transpose();
  }

  BoardPose pose;
  pose.rvec = rodrigues_inv(r);
  pose.tvec = lambda * h.m.col(2);

  // Pose-only refinement on pixel residuals.
  auto residuals = [&](const Eigen::VectorXd& x) {
    BoardPose p{x.segment<3>(0), x.segment<3>(3)};
    const std::vector<Point2> proj = project_points(cam, p, object_points);
    Eigen::VectorXd r_out(2 * n);
    for (int i = 0; i < n; ++i) {
      r_out[2 * i] = image_points[i].x() - proj[i].x();
      r_out[2 * i + 1] = image_points[i].y() - proj[i].y();
    }
    return r_out;
  };
  Eigen::VectorXd x0(6);
  x0 << pose.rvec, pose.tvec;
  Eigen::VectorXd steps(6);
  steps << 1e-7, 1e-7, 1e-7, 1e-6, 1e-6, 1e-6;
  LmOptions opts;
  opts.max_iters = lm.max_iters_intrinsics;
  opts.rel_cost_tol = lm.rel_cost_tol_intrinsics;
  opts.lambda_init = lm.lambda_init;
  opts.lambda_up = lm.lambda_up;
  opts.lambda_down = lm.lambda_down;
  const LmResult res = lm_solve(residuals, x0, steps, opts);

  BoardPose refined;
  refined.rvec = canonical_rvec(res.x.segment<3>(0));
  refined.tvec = res.x.segment<3>(3);
  return refined;
}

Eigen::VectorXd stereo_residuals(const std::vector<MatchedView>& views, const CameraModel& k_rgb,
                                 const CameraModel& k_tir, const StereoExtrinsics& stereo,
                                 const std::vector<BoardPose>& poses) {
  check_views(views);
  if (poses.size() != views.size())
    throw ValidationError("stereo_residuals: one pose per view required");
  const Mat3 r_s = rodrigues(stereo.rvec);
  size_t total = 0;
  for (const auto& v : views) total += 4 * v.object_points.size();
  Eigen::VectorXd r(total);
  size_t row = 0;
  for (size_t i = 0; i < views.size(); ++i) {
    const Eigen::VectorXd block =
        view_residuals(views[i], k_rgb, k_tir, r_s, stereo.tvec, poses[i]);
    r.segment(row, block.size()) = block;
    row += block.size();
  }
  return r;
}

double stereo_cost(const std::vector<MatchedView>& views, const CameraModel& k_rgb,
                   const CameraModel& k_tir, const StereoExtrinsics& stereo,
                   const std::vector<BoardPose>& poses) {
  return stereo_residuals(views, k_rgb, k_tir, stereo, poses).squaredNorm();
}

RmsMetrics rms_metrics(const Eigen::VectorXd& residuals, const std::vector<int>& view_sizes) {
  size_t expected = 0;
  for (int n : view_sizes) {
    if (n <= 0) throw ValidationError("rms_metrics: view sizes must be positive");
    expected += 4 * static_cast<size_t>(n);
  }
  if (static_cast<size_t>(residuals.size()) != expected)
    throw ValidationError("rms_metrics: residual length does not match view sizes");

  RmsMetrics m;
  double total_pts = 0.0;
  double rgb_acc = 0.0, tir_acc = 0.0;
  size_t row = 0;
  for (int n : view_sizes) {
    const double rgb_sq = residuals.segment(row, 2 * n).squaredNorm();
    const double tir_sq = residuals.segment(row + 2 * n, 2 * n).squaredNorm();
    row += 4 * static_cast<size_t>(n);
    m.per_view_rgb.push_back(std::sqrt(rgb_sq / n));
    m.per_view_tir.push_back(std::sqrt(tir_sq / n));
    // Eq-style pooling: per-view RMS squared, weighted by the view's point
    // count, collapses back to the plain sum of squares.
    rgb_acc += rgb_sq;
    tir_acc += tir_sq;
    total_pts += n;
  }
  m.rms_rgb = std::sqrt(rgb_acc / total_pts);
  m.rms_tir = std::sqrt(tir_acc / total_pts);
  m.rms_total = std::sqrt(residuals.squaredNorm() / (2.0 * total_pts));
  return m;
}

StereoReport bundle_adjust(const std::vector<MatchedView>& views, const CameraModel& k_rgb,
                           const CameraModel& k_tir, const StereoExtrinsics& init_stereo,
                           const std::vector<BoardPose>& init_poses, std::optional<double> fix_tz,
                           const LmConfig& lm) {
  return run_bundle(views, k_rgb, k_tir, init_stereo, init_poses, fix_tz, lm);
}

StereoInit init_stereo_from_views(const std::vector<MatchedView>& views, const CameraModel& k_rgb,
                                  const CameraModel& k_tir, const LmConfig& lm) {
  check_views(views);
  StereoInit init;
  std::vector<Eigen::Quaterniond> rel_rots;
  std::vector<Vec3> rel_ts;
  for (const auto& v : views) {
    const BoardPose pose_rgb = pnp_planar(k_rgb, v.object_points, v.rgb_points, lm);
    const BoardPose pose_tir = pnp_planar(k_tir, v.object_points, v.tir_points, lm);
    const Mat3 r_rgb = rodrigues(pose_rgb.rvec);
    const Mat3 r_tir = rodrigues(pose_tir.rvec);
    const Mat3 r_rel = r_tir * r_rgb.transpose();
    rel_rots.emplace_back(r_rel);
    rel_ts.push_back(pose_tir.tvec - r_rel * pose_rgb.tvec);
    init.rgb_poses.push_back(pose_rgb);
  }

  // Chordal quaternion mean with sign alignment against the first view.
  Eigen::Vector4d acc = Eigen::Vector4d::Zero();
  const Eigen::Quaterniond ref = rel_rots.front();
  for (auto q : rel_rots) {
    if (q.coeffs().dot(ref.coeffs()) < 0.0) q.coeffs() = -q.coeffs();
    acc += q.coeffs();
  }
  Eigen::Quaterniond mean_q;
  mean_q.coeffs() = acc.normalized();
  init.stereo.rvec = rodrigues_inv(mean_q.toRotationMatrix());

  // Component-wise median translation, robust to the odd PnP outlier.
  for (int axis = 0; axis < 3; ++axis) {
    std::vector<double> vals;
    vals.reserve(rel_ts.size());
    for (const auto& t : rel_ts) vals.push_back(t[axis]);
    std::sort(vals.begin(), vals.end());
    const size_t n = vals.size();
    init.stereo.tvec[axis] = n % 2 ? vals[n / 2] : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
  }
  return init;
}

StereoReport unconstrained_reference(const std::vector<MatchedView>& views,
                                     const CameraModel& k_rgb, const CameraModel& k_tir,
                                     const LmConfig& lm) {
  const StereoInit init = init_stereo_from_views(views, k_rgb, k_tir, lm);
  return run_bundle(views, k_rgb, k_tir, init.stereo, init.rgb_poses, std::nullopt, lm);
}

StereoReport solve_stereo(const std::vector<MatchedView>& views, const CameraModel& k_rgb,
                          const CameraModel& k_tir, std::optional<double> fix_tz,
                          const LmConfig& lm, StereoReport* reference) {
  StereoReport unconstrained = unconstrained_reference(views, k_rgb, k_tir, lm);
  if (!fix_tz) {
    if (reference) *reference = unconstrained;
    return unconstrained;
  }
  // Warm start the constrained run from the unconstrained solution with T_z
  // snapped to the pinned value.
  StereoReport constrained =
      run_bundle(views, k_rgb, k_tir, unconstrained.extrinsics, unconstrained.poses, fix_tz, lm);
  if (reference) *reference = std::move(unconstrained);
  return constrained;
}

}  // namespace tcal
