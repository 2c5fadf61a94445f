#include "tcal/camera.hpp"

#include <cmath>

#include "tcal/errors.hpp"

namespace tcal {

double CameraModel::param(int i) const {
  switch (i) {
    case 0: return fx;
    case 1: return fy;
    case 2: return cx;
    case 3: return cy;
    case 4: return k1;
    case 5: return k2;
    case 6: return p1;
    case 7: return p2;
    case 8: return k3;
    default: throw ValidationError("camera: parameter index out of range");
  }
}

void CameraModel::set_param(int i, double v) {
  switch (i) {
    case 0: fx = v; break;
    case 1: fy = v; break;
    case 2: cx = v; break;
    case 3: cy = v; break;
    case 4: k1 = v; break;
    case 5: k2 = v; break;
    case 6: p1 = v; break;
    case 7: p2 = v; break;
    case 8: k3 = v; break;
    default: throw ValidationError("camera: parameter index out of range");
  }
}

CameraModel CameraModel::tir_preset(int width, int height) {
  CameraModel cam;
  cam.width = width;
  cam.height = height;
  cam.fixed = {false, false, false, false, false, false, true, true, true};
  return cam;
}

CameraModel CameraModel::rgb_preset(int width, int height) {
  CameraModel cam;
  cam.width = width;
  cam.height = height;
  cam.fixed = {false, false, false, false, true, true, true, true, true};
  cam.fy_equals_fx = true;
  return cam;
}

Mat3 rodrigues(const Vec3& rvec) {
  const double theta = rvec.norm();
  if (theta < 1e-12) return Mat3::Identity();
  const Vec3 axis = rvec / theta;
  Mat3 k;
  k << 0, -axis.z(), axis.y(), axis.z(), 0, -axis.x(), -axis.y(), axis.x(), 0;
  return Mat3::Identity() + std::sin(theta) * k + (1.0 - std::cos(theta)) * (k * k);
}

Vec3 rodrigues_inv(const Mat3& r) {
  if ((r * r.transpose() - Mat3::Identity()).norm() > 1e-6 || std::abs(r.determinant() - 1.0) > 1e-6)
    throw NotARotation("matrix is not orthonormal with det +1");

  const double tr = r.trace();
  const double cos_theta = std::min(1.0, std::max(-1.0, (tr - 1.0) / 2.0));
  const double theta = std::acos(cos_theta);
  if (theta < 1e-12) return Vec3::Zero();

  if (theta < M_PI - 1e-6) {
    Vec3 axis{r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1)};
    axis /= 2.0 * std::sin(theta);
    return theta * axis;
  }
  // Near pi the off-diagonal difference vanishes; recover the axis from the
  // dominant diagonal entry of R + I.
  Vec3 axis;
  const Mat3 s = (r + Mat3::Identity()) / 2.0;
  int imax = 0;
  for (int i = 1; i < 3; ++i)
    if (s(i, i) > s(imax, imax)) imax = i;
  axis[imax] = std::sqrt(std::max(s(imax, imax), 0.0));
  for (int i = 0; i < 3; ++i)
    if (i != imax) axis[i] = s(imax, i) / axis[imax];
  axis.normalize();
  // Fix the sign using the skew part when it is not entirely degenerate.
  const Vec3 skew{r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1)};
  if (skew.dot(axis) < 0.0) axis = -axis;
  return theta * axis;
}

Vec3 canonical_rvec(Vec3 rvec) {
  double theta = rvec.norm();
  if (theta <= M_PI) return rvec;
  const Vec3 axis = rvec / theta;
  theta = std::fmod(theta, 2.0 * M_PI);
  if (theta > M_PI) theta -= 2.0 * M_PI;  // may flip sign, same rotation
  return theta * axis;
}

Point2 distort_normalised(const CameraModel& cam, const Point2& n) {
  const double x = n.x(), y = n.y();
  const double r2 = x * x + y * y;
  const double radial = 1.0 + r2 * (cam.k1 + r2 * (cam.k2 + r2 * cam.k3));
  const double xt = 2.0 * cam.p1 * x * y + cam.p2 * (r2 + 2.0 * x * x);
  const double yt = cam.p1 * (r2 + 2.0 * y * y) + 2.0 * cam.p2 * x * y;
  return {x * radial + xt, y * radial + yt};
}

Point2 project_point(const CameraModel& cam, const Vec3& p_cam) {
  if (p_cam.z() <= 1e-9)
    throw BehindCamera("point at z = " + std::to_string(p_cam.z()));
  const Point2 d = distort_normalised(cam, {p_cam.x() / p_cam.z(), p_cam.y() / p_cam.z()});
  return {cam.fx * d.x() + cam.cx, cam.fy * d.y() + cam.cy};
}

std::vector<Point2> project_points(const CameraModel& cam, const BoardPose& pose,
                                   const std::vector<Point3>& object_points) {
  const Mat3 r = rodrigues(pose.rvec);
  std::vector<Point2> out;
  out.reserve(object_points.size());
  for (const auto& p : object_points) out.push_back(project_point(cam, r * p + pose.tvec));
  return out;
}

Point2 undistorted_normalised(const CameraModel& cam, const Point2& pixel) {
  const double xd = (pixel.x() - cam.cx) / cam.fx;
  const double yd = (pixel.y() - cam.cy) / cam.fy;
  double x = xd, y = yd;
  double delta = 0.0;
  for (int it = 0; it < 20; ++it) {
    const double r2 = x * x + y * y;
    const double radial = 1.0 + r2 * (cam.k1 + r2 * (cam.k2 + r2 * cam.k3));
    const double xt = 2.0 * cam.p1 * x * y + cam.p2 * (r2 + 2.0 * x * x);
    const double yt = cam.p1 * (r2 + 2.0 * y * y) + 2.0 * cam.p2 * x * y;
    if (std::abs(radial) < 1e-12) throw NoConvergence("undistort: radial factor vanished");
    const double xn = (xd - xt) / radial;
    const double yn = (yd - yt) / radial;
    delta = std::hypot(xn - x, yn - y);
    x = xn;
    y = yn;
    if (delta < 1e-8) break;
  }
  if (!std::isfinite(x) || !std::isfinite(y) || delta > 1e-6)
    throw NoConvergence("undistort: fixed point did not settle (delta " + std::to_string(delta) +
                        ")");
  return {x, y};
}

Point2 undistort_point(const CameraModel& cam, const Point2& pixel) {
  const Point2 n = undistorted_normalised(cam, pixel);
  return {cam.fx * n.x() + cam.cx, cam.fy * n.y() + cam.cy};
}

std::vector<Point2> undistort_points(const CameraModel& cam, const std::vector<Point2>& pixels) {
  std::vector<Point2> out;
  out.reserve(pixels.size());
  for (const auto& p : pixels) out.push_back(undistort_point(cam, p));
  return out;
}

}  // namespace tcal
