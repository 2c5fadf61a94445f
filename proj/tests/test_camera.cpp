#include <doctest.h>

#include <cmath>

#include <Eigen/Geometry>

#include "tcal/camera.hpp"
#include "tcal/errors.hpp"
#include "tcal/rng.hpp"

using namespace tcal;

namespace {

CameraModel tir_truth() {
  CameraModel cam = CameraModel::tir_preset(80, 62);
  cam.fx = 107.56;
  cam.fy = 109.81;
  cam.cx = 42.6;
  cam.cy = 35.75;
  cam.k1 = -0.11;
  cam.k2 = -0.01;
  return cam;
}

}  // namespace

TEST_CASE("rodrigues matches the quaternion rotation oracle") {
  CounterRng rng(3);
  for (uint64_t i = 0; i < 100; ++i) {
    Vec3 axis(rng.uniform(1, 3 * i, -1.0, 1.0), rng.uniform(1, 3 * i + 1, -1.0, 1.0),
              rng.uniform(1, 3 * i + 2, -1.0, 1.0));
    if (axis.norm() < 1e-6) axis = Vec3::UnitX();
    axis.normalize();
    const double angle = rng.uniform(2, i, -3.1, 3.1);
    const Mat3 want = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
    CHECK((rodrigues(axis * angle) - want).cwiseAbs().maxCoeff() < 1e-13);
  }
  CHECK((rodrigues(Vec3::Zero()) - Mat3::Identity()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("rodrigues_inv round-trips and canonicalises the angle") {
  CounterRng rng(5);
  for (uint64_t i = 0; i < 100; ++i) {
    Vec3 axis(rng.uniform(1, 3 * i, -1.0, 1.0), rng.uniform(1, 3 * i + 1, -1.0, 1.0),
              rng.uniform(1, 3 * i + 2, -1.0, 1.0));
    if (axis.norm() < 1e-6) axis = Vec3::UnitY();
    axis.normalize();
    const double angle = rng.uniform(2, i, 0.01, 3.1);
    const Vec3 rvec = axis * angle;
    const Vec3 back = rodrigues_inv(rodrigues(rvec));
    CHECK((back - rvec).norm() < 1e-10);
  }
  // angles beyond pi wrap to the equivalent short rotation
  const Vec3 long_rvec = Vec3::UnitZ() * (M_PI + 0.4);
  const Vec3 wrapped = rodrigues_inv(rodrigues(long_rvec));
  CHECK(wrapped.norm() <= M_PI + 1e-12);
  CHECK((rodrigues(wrapped) - rodrigues(long_rvec)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((canonical_rvec(long_rvec) - wrapped).norm() < 1e-10);
}

TEST_CASE("rodrigues_inv rejects matrices that are not rotations") {
  Mat3 bad = Mat3::Identity();
  bad(0, 0) = 1.5;
  CHECK_THROWS_AS(rodrigues_inv(bad), NotARotation);
  Mat3 reflect = Mat3::Identity();
  reflect(2, 2) = -1.0;  // det -1
  CHECK_THROWS_AS(rodrigues_inv(reflect), NotARotation);
}

TEST_CASE("projection applies the distortion polynomial then K") {
  const CameraModel cam = tir_truth();
  const Vec3 p(0.21, -0.13, 1.7);

  const double x = p.x() / p.z(), y = p.y() / p.z();
  const double r2 = x * x + y * y;
  const double radial = 1.0 + cam.k1 * r2 + cam.k2 * r2 * r2 + cam.k3 * r2 * r2 * r2;
  const double xd = x * radial + 2.0 * cam.p1 * x * y + cam.p2 * (r2 + 2.0 * x * x);
  const double yd = y * radial + cam.p1 * (r2 + 2.0 * y * y) + 2.0 * cam.p2 * x * y;

  const Point2 got = project_point(cam, p);
  CHECK(got.x() == doctest::Approx(cam.fx * xd + cam.cx).epsilon(1e-14));
  CHECK(got.y() == doctest::Approx(cam.fy * yd + cam.cy).epsilon(1e-14));
}

TEST_CASE("tangential distortion terms follow the standard model") {
  CameraModel cam;
  cam.fx = 100.0;
  cam.fy = 100.0;
  cam.cx = 40.0;
  cam.cy = 30.0;
  cam.p1 = 0.01;
  cam.p2 = -0.02;
  const double x = 0.3, y = -0.2, r2 = x * x + y * y;
  const Point2 d = distort_normalised(cam, Point2(x, y));
  CHECK(d.x() == doctest::Approx(x + 2 * 0.01 * x * y + (-0.02) * (r2 + 2 * x * x)).epsilon(1e-14));
  CHECK(d.y() == doctest::Approx(y + 0.01 * (r2 + 2 * y * y) + 2 * (-0.02) * x * y).epsilon(1e-14));
}

TEST_CASE("points at or behind the camera plane are rejected") {
  const CameraModel cam = tir_truth();
  CHECK_THROWS_AS(project_point(cam, Vec3(0.1, 0.1, 0.0)), BehindCamera);
  CHECK_THROWS_AS(project_point(cam, Vec3(0.1, 0.1, -2.0)), BehindCamera);
  CHECK_THROWS_AS(project_point(cam, Vec3(0.1, 0.1, 1e-12)), BehindCamera);
  CHECK_NOTHROW(project_point(cam, Vec3(0.1, 0.1, 1e-6)));
}

TEST_CASE("project_points composes rodrigues pose with per-point projection") {
  const CameraModel cam = tir_truth();
  BoardPose pose;
  pose.rvec = Vec3(0.1, -0.2, 0.05);
  pose.tvec = Vec3(-0.3, 0.1, 2.0);
  const std::vector<Point3> pts = {{0, 0, 0}, {0.4, 0, 0}, {0.4, 0.3, 0}, {0.1, 0.2, 0}};
  const std::vector<Point2> got = project_points(cam, pose, pts);
  const Mat3 r = rodrigues(pose.rvec);
  REQUIRE(got.size() == pts.size());
  for (size_t i = 0; i < pts.size(); ++i) {
    const Point2 want = project_point(cam, r * pts[i] + pose.tvec);
    CHECK((got[i] - want).norm() == 0.0);
  }
}

TEST_CASE("undistortion inverts the distortion across the full sensor") {
  const CameraModel cam = tir_truth();
  BoardPose pose;
  pose.tvec = Vec3(0, 0, 1.0);
  for (int gy = 2; gy < 62; gy += 6)
    for (int gx = 2; gx < 80; gx += 6) {
      const Point2 px(gx, gy);
      const Point2 n = undistorted_normalised(cam, px);
      const Point2 redistorted = distort_normalised(cam, n);
      CHECK(std::abs(cam.fx * redistorted.x() + cam.cx - px.x()) < 1e-7);
      CHECK(std::abs(cam.fy * redistorted.y() + cam.cy - px.y()) < 1e-7);
      // undistort_point composes the same normalised point with pinhole K
      const Point2 up = undistort_point(cam, px);
      CHECK(up.x() == doctest::Approx(cam.fx * n.x() + cam.cx).epsilon(1e-12));
      CHECK(up.y() == doctest::Approx(cam.fy * n.y() + cam.cy).epsilon(1e-12));
    }
}

TEST_CASE("camera presets freeze the right parameters") {
  const CameraModel tir = CameraModel::tir_preset(80, 62);
  CHECK(tir.width == 80);
  CHECK(tir.height == 62);
  CHECK_FALSE(tir.fy_equals_fx);
  // free: fx fy cx cy k1 k2; frozen: p1 p2 k3
  const std::array<bool, 9> tir_fixed = {false, false, false, false, false,
                                         false, true,  true,  true};
  CHECK(tir.fixed == tir_fixed);

  const CameraModel rgb = CameraModel::rgb_preset(2028, 1520);
  CHECK(rgb.fy_equals_fx);
  const std::array<bool, 9> rgb_fixed = {false, false, false, false, true,
                                         true,  true,  true,  true};
  CHECK(rgb.fixed == rgb_fixed);
}

TEST_CASE("param accessors agree with the declared ordering") {
  CameraModel cam;
  for (int i = 0; i < 9; ++i) cam.set_param(i, 10.0 + i);
  CHECK(cam.fx == 10.0);
  CHECK(cam.fy == 11.0);
  CHECK(cam.cx == 12.0);
  CHECK(cam.cy == 13.0);
  CHECK(cam.k1 == 14.0);
  CHECK(cam.k2 == 15.0);
  CHECK(cam.p1 == 16.0);
  CHECK(cam.p2 == 17.0);
  CHECK(cam.k3 == 18.0);
  for (int i = 0; i < 9; ++i) CHECK(cam.param(i) == 10.0 + i);
}
