#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "tcal/camera.hpp"
#include "tcal/errors.hpp"
#include "tcal/fusion.hpp"
#include "tcal/rng.hpp"

using namespace tcal;

namespace {

CameraModel simple_camera(double fx, double cx, double cy, int w, int h) {
  CameraModel cam;
  cam.fx = cam.fy = fx;
  cam.cx = cx;
  cam.cy = cy;
  cam.width = w;
  cam.height = h;
  return cam;
}

ScalarImage ramp_image(int w, int h) {
  ScalarImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.at(x, y) = x + 10.0 * y;
  return img;
}

}  // namespace

TEST_CASE("plane_from_pose recovers the board plane") {
  SUBCASE("frontal board straight ahead") {
    BoardPose pose;
    pose.tvec = Vec3(0.0, 0.0, 2.0);
    const ScenePlane plane = plane_from_pose(pose);
    CHECK(plane.normal.x() == 0.0);
    CHECK(plane.normal.y() == 0.0);
    CHECK(plane.normal.z() == 1.0);
    CHECK(plane.d == 2.0);
  }

  SUBCASE("normal sign is flipped to keep d positive") {
    // A board rotated half a turn about x faces away; the plane is the same.
    BoardPose pose;
    pose.rvec = Vec3(M_PI, 0.0, 0.0);
    pose.tvec = Vec3(0.0, 0.0, 2.0);
    const ScenePlane plane = plane_from_pose(pose);
    CHECK(plane.d > 0.0);
    CHECK(plane.normal.z() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(plane.d == doctest::Approx(2.0).epsilon(1e-12));
  }

  SUBCASE("transformed board points lie on the plane") {
    BoardPose pose;
    pose.rvec = Vec3(0.3, -0.2, 0.1);
    pose.tvec = Vec3(0.4, -0.1, 1.7);
    const ScenePlane plane = plane_from_pose(pose);
    CHECK(plane.normal.norm() == doctest::Approx(1.0).epsilon(1e-12));
    const Mat3 r = rodrigues(pose.rvec);
    for (double bx : {0.0, 0.45, 0.9})
      for (double by : {0.0, 0.3}) {
        const Vec3 p = r * Vec3(bx, by, 0.0) + pose.tvec;
        CHECK(plane.normal.dot(p) == doctest::Approx(plane.d).epsilon(1e-12));
      }
  }
}

TEST_CASE("plane_depth of a frontal plane is exactly constant") {
  const CameraModel cam = simple_camera(90.0, 40.0, 30.0, 80, 62);
  ScenePlane plane;
  plane.normal = Vec3(0.0, 0.0, 1.0);
  plane.d = 2.0;
  const ScalarImage depth = plane_depth(cam, plane, cam.width, cam.height);
  // The denominator collapses to exactly 1, so every pixel carries the bit
  // pattern of d itself.
  for (int v = 0; v < depth.height; ++v)
    for (int u = 0; u < depth.width; ++u) CHECK(depth.at(u, v) == 2.0);
}

TEST_CASE("plane_depth satisfies the ray-plane equation on tilted planes") {
  // Wide-angle camera so part of the frame looks past the plane horizon.
  const CameraModel cam = simple_camera(10.0, 32.0, 24.0, 64, 48);
  ScenePlane plane;
  plane.normal = Vec3(0.6, 0.0, 0.8);
  plane.d = 1.0;
  const ScalarImage depth = plane_depth(cam, plane, cam.width, cam.height);

  int valid = 0, invalid = 0;
  for (int v = 0; v < depth.height; ++v)
    for (int u = 0; u < depth.width; ++u) {
      const double xn = (u - cam.cx) / cam.fx;
      const double yn = (v - cam.cy) / cam.fy;
      const double denom = plane.normal.dot(Vec3(xn, yn, 1.0));
      const double z = depth.at(u, v);
      if (denom > 1e-9) {
        ++valid;
        CHECK(z * denom == doctest::Approx(plane.d).epsilon(1e-12));
      } else {
        ++invalid;
        CHECK(z == 0.0);
      }
    }
  CHECK(valid > 0);
  CHECK(invalid > 0);

  CHECK_THROWS_AS(plane_depth(cam, plane, 0, 48), ValidationError);
}

TEST_CASE("build_remap with an identity rig is the identity grid") {
  const CameraModel cam = simple_camera(95.0, 39.5, 30.5, 80, 62);
  ScenePlane plane;
  plane.d = 2.0;
  const ScalarImage depth = plane_depth(cam, plane, cam.width, cam.height);
  const StereoExtrinsics rig;  // R = I, T = 0
  const RemapMaps maps = build_remap(cam, cam, rig, depth);
  for (int v = 0; v < depth.height; ++v)
    for (int u = 0; u < depth.width; ++u) {
      CHECK(maps.map_u.at(u, v) == doctest::Approx(u).epsilon(1e-9));
      CHECK(maps.map_v.at(u, v) == doctest::Approx(v).epsilon(1e-9));
    }
}

TEST_CASE("pure-baseline remap reproduces the analytic disparity") {
  const CameraModel cam = simple_camera(107.56, 42.6, 35.75, 80, 62);
  const double z0 = 2.0;
  const double b = 0.0327;
  ScenePlane plane;
  plane.d = z0;
  const ScalarImage depth = plane_depth(cam, plane, cam.width, cam.height);
  StereoExtrinsics rig;
  rig.tvec = Vec3(b, 0.0, 0.0);
  const RemapMaps maps = build_remap(cam, cam, rig, depth);

  // Shared intrinsics on both ends make u - map_u the classic disparity
  // -fx b / Z, identical at every pixel.
  const double expected = -cam.fx * b / z0;
  double lo = 1e300, hi = -1e300;
  for (int v = 0; v < depth.height; ++v)
    for (int u = 0; u < depth.width; ++u) {
      const double disparity = u - maps.map_u.at(u, v);
      CHECK(disparity == doctest::Approx(expected).epsilon(1e-9));
      CHECK(maps.map_v.at(u, v) == doctest::Approx(v).epsilon(1e-9));
      lo = std::min(lo, disparity);
      hi = std::max(hi, disparity);
    }
  CHECK(hi - lo < 1e-9);
}

TEST_CASE("build_remap marks rays behind the far camera invalid") {
  const CameraModel cam = simple_camera(50.0, 8.0, 6.0, 16, 12);
  ScalarImage depth(16, 12);
  for (int v = 0; v < 12; ++v)
    for (int u = 0; u < 16; ++u) depth.at(u, v) = 1.0;
  depth.at(3, 4) = 0.0;  // no depth here
  StereoExtrinsics rig;
  rig.tvec = Vec3(0.0, 0.0, -5.0);  // far camera sits 5 m ahead of the plane
  const RemapMaps maps = build_remap(cam, cam, rig, depth);
  for (int v = 0; v < 12; ++v)
    for (int u = 0; u < 16; ++u) {
      CHECK(maps.map_u.at(u, v) == -1.0);
      CHECK(maps.map_v.at(u, v) == -1.0);
    }
}

TEST_CASE("remap_overlay copies bits through an identity map") {
  // fx = 1, cx = 0 keeps every normalised coordinate an exact integer, so the
  // identity remap is bit-exact end to end.
  const CameraModel cam = simple_camera(1.0, 0.0, 0.0, 9, 7);
  ScalarImage img(9, 7);
  const CounterRng rng(7);
  for (int y = 0; y < 7; ++y)
    for (int x = 0; x < 9; ++x) img.at(x, y) = rng.uniform(0, y * 9 + x, -40.0, 300.0);
  ScalarImage depth(9, 7);
  for (int i = 0; i < 63; ++i) depth.data[i] = 2.0;

  const RemapMaps maps = build_remap(cam, cam, StereoExtrinsics{}, depth);
  ScalarImage valid;
  const ScalarImage out = remap_overlay(img, maps, &valid);
  for (int y = 0; y < 7; ++y)
    for (int x = 0; x < 9; ++x) {
      CHECK(out.at(x, y) == img.at(x, y));
      CHECK(valid.at(x, y) == 1.0);
    }
}

TEST_CASE("remap_overlay zeroes sentinel and out-of-support samples") {
  ScalarImage img(6, 5);
  for (int i = 0; i < 30; ++i) img.data[i] = 10.0 + i;

  RemapMaps maps{ScalarImage(4, 1), ScalarImage(4, 1)};
  maps.map_u.at(0, 0) = -1.0;  // sentinel
  maps.map_v.at(0, 0) = -1.0;
  maps.map_u.at(1, 0) = 5.0;  // exactly on the last column: still valid
  maps.map_v.at(1, 0) = 4.0;
  maps.map_u.at(2, 0) = 5.001;  // support leaves the image
  maps.map_v.at(2, 0) = 4.0;
  maps.map_u.at(3, 0) = 2.5;
  maps.map_v.at(3, 0) = 1.5;

  ScalarImage valid;
  const ScalarImage out = remap_overlay(img, maps, &valid);
  CHECK(out.at(0, 0) == 0.0);
  CHECK(valid.at(0, 0) == 0.0);
  CHECK(out.at(1, 0) == img.at(5, 4));
  CHECK(valid.at(1, 0) == 1.0);
  CHECK(out.at(2, 0) == 0.0);
  CHECK(valid.at(2, 0) == 0.0);
  // Plain bilinear blend of the four neighbours around (2.5, 1.5).
  const double blend =
      0.25 * (img.at(2, 1) + img.at(3, 1) + img.at(2, 2) + img.at(3, 2));
  CHECK(out.at(3, 0) == doctest::Approx(blend).epsilon(1e-15));
  CHECK(valid.at(3, 0) == 1.0);

  RemapMaps bad{ScalarImage(4, 1), ScalarImage(3, 1)};
  CHECK_THROWS_AS(remap_overlay(img, bad, nullptr), ValidationError);
}

TEST_CASE("roi_stats matches a hand-computed rectangle") {
  const ScalarImage overlay = ramp_image(8, 6);
  // Pixel centres (2..4) x (1..2) fall inside; 6 pixels total.
  const std::vector<Point2> rect{Point2(1.5, 0.5), Point2(4.5, 0.5), Point2(4.5, 2.5),
                                 Point2(1.5, 2.5)};

  SUBCASE("without a mask") {
    const RoiStats s = roi_stats(overlay, rect, nullptr, "box");
    CHECK(s.name == "box");
    CHECK(s.pixel_count == 6);
    CHECK(s.area_pct == doctest::Approx(100.0 * 6 / 48).epsilon(1e-15));
    CHECK(s.mean == doctest::Approx(18.0).epsilon(1e-15));
    CHECK(s.median == doctest::Approx(18.0).epsilon(1e-15));  // (14 + 22) / 2
    CHECK(s.std_dev == doctest::Approx(std::sqrt(154.0 / 6.0)).epsilon(1e-15));
    CHECK(s.min == 12.0);
    CHECK(s.max == 24.0);
  }

  SUBCASE("mask removes pixels from the statistics but not the area") {
    ScalarImage mask(8, 6);
    for (int i = 0; i < 48; ++i) mask.data[i] = 1.0;
    mask.at(2, 1) = 0.0;  // drop the value 12
    const RoiStats s = roi_stats(overlay, rect, &mask);
    CHECK(s.pixel_count == 5);
    CHECK(s.area_pct == doctest::Approx(100.0 * 6 / 48).epsilon(1e-15));
    CHECK(s.mean == doctest::Approx(96.0 / 5).epsilon(1e-15));
    CHECK(s.median == 22.0);  // odd count: the middle element
    CHECK(s.min == 13.0);
  }

  SUBCASE("degenerate inputs throw") {
    CHECK_THROWS_AS(roi_stats(overlay, {Point2(0, 0), Point2(1, 0)}), ValidationError);
    // A sliver between pixel centres contains nothing.
    const std::vector<Point2> sliver{Point2(0.1, 0.1), Point2(0.4, 0.1), Point2(0.4, 0.4)};
    CHECK_THROWS_AS(roi_stats(overlay, sliver), EmptyRoi);
    // All-zero mask empties an otherwise populated ROI.
    ScalarImage mask(8, 6);
    CHECK_THROWS_AS(roi_stats(overlay, rect, &mask), EmptyRoi);
    ScalarImage wrong(4, 3);
    CHECK_THROWS_AS(roi_stats(overlay, rect, &wrong), ValidationError);
  }
}

TEST_CASE("marching squares emits the textbook single-cell segment") {
  ScalarImage img(2, 2);
  img.at(1, 0) = 1.0;  // only the top-right corner is above the level
  const auto lines = marching_squares(img, 0.5);
  REQUIRE(lines.size() == 1);
  REQUIRE(lines[0].size() == 2);
  CHECK(lines[0][0].x() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(lines[0][0].y() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(lines[0][1].x() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(lines[0][1].y() == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("marching squares splits saddle cells by the centre average") {
  ScalarImage img(2, 2);
  img.at(0, 0) = 1.0;
  img.at(1, 1) = 1.0;  // opposite corners high: centre average is 0.5

  // Returns the far end of the segment that starts at `from`.
  auto other_end = [](const std::vector<std::vector<Point2>>& ls, const Point2& from) {
    for (const auto& l : ls) {
      if ((l.front() - from).norm() < 1e-9) return l.back();
      if ((l.back() - from).norm() < 1e-9) return l.front();
    }
    REQUIRE(false);
    return Point2();
  };

  // Centre above the level: the high corners connect through the middle, so
  // the left edge point pairs with the top one.
  auto lines = marching_squares(img, 0.4);
  REQUIRE(lines.size() == 2);
  CHECK((other_end(lines, Point2(0.0, 0.6)) - Point2(0.6, 0.0)).norm() < 1e-9);

  // Centre below the level: the high corners are pinched off and the left
  // edge point pairs with the bottom one instead.
  auto pinched = marching_squares(img, 0.6);
  REQUIRE(pinched.size() == 2);
  CHECK((other_end(pinched, Point2(0.0, 0.4)) - Point2(0.6, 1.0)).norm() < 1e-9);

  CHECK(marching_squares(ScalarImage(5, 5), 0.5).empty());
}

TEST_CASE("marching squares traces a closed circle on a cone") {
  const int n = 21;
  const double r0 = 6.0;
  ScalarImage img(n, n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) img.at(x, y) = 10.0 - std::hypot(x - 10.0, y - 10.0);
  const auto lines = marching_squares(img, 10.0 - r0);
  REQUIRE(lines.size() == 1);
  const auto& ring = lines[0];
  CHECK(ring.size() > 20);
  CHECK((ring.front() - ring.back()).norm() < 1e-3);  // chained into a loop
  for (const auto& p : ring) {
    const double r = std::hypot(p.x() - 10.0, p.y() - 10.0);
    // Grid-edge interpolation of a cone stays close to the true circle.
    CHECK(r == doctest::Approx(r0).epsilon(0.04));
  }
}

TEST_CASE("thermal palette runs blue to red with a green middle") {
  const auto& lut = thermal_palette();
  CHECK(lut[0].r == 0);
  CHECK(lut[0].g == 0);
  CHECK(lut[0].b == 128);
  CHECK(lut[255].r == 128);
  CHECK(lut[255].g == 0);
  CHECK(lut[255].b == 0);
  CHECK(lut[127].g == 255);
  for (int i = 0; i <= 40; ++i) {
    CHECK(lut[i].b > lut[i].r);
  }
  for (int i = 215; i < 256; ++i) {
    CHECK(lut[i].r > lut[i].b);
  }
}

TEST_CASE("distortion_free zeroes the polynomial and keeps K") {
  CameraModel cam = CameraModel::tir_preset(80, 62);
  cam.fx = 107.56;
  cam.fy = 109.81;
  cam.cx = 42.6;
  cam.cy = 35.75;
  cam.k1 = -0.11;
  cam.k2 = -0.01;
  const CameraModel out = distortion_free(cam);
  CHECK(out.fx == cam.fx);
  CHECK(out.fy == cam.fy);
  CHECK(out.cx == cam.cx);
  CHECK(out.cy == cam.cy);
  CHECK(out.width == 80);
  CHECK(out.height == 62);
  CHECK(out.k1 == 0.0);
  CHECK(out.k2 == 0.0);
  CHECK(out.k3 == 0.0);
  CHECK(out.p1 == 0.0);
  CHECK(out.p2 == 0.0);
}

TEST_CASE("undistort_image is the identity for a distortion-free camera") {
  CameraModel cam = simple_camera(107.56, 42.6, 35.75, 80, 62);
  ScalarImage img(80, 62);
  const CounterRng rng(3);
  for (int y = 0; y < 62; ++y)
    for (int x = 0; x < 80; ++x) img.at(x, y) = rng.uniform(0, y * 80 + x, 0.0, 255.0);
  const ScalarImage out = undistort_image(img, cam);
  for (int y = 0; y < 62; ++y)
    for (int x = 0; x < 80; ++x)
      CHECK(out.at(x, y) == doctest::Approx(img.at(x, y)).epsilon(1e-9));
}

TEST_CASE("undistort_image resamples through the distortion model") {
  CameraModel cam = simple_camera(40.0, 24.0, 18.0, 48, 36);
  cam.k1 = 0.3;  // pincushion: border rays land outside the source frame
  ScalarImage img(48, 36);
  const CounterRng rng(5);
  for (int y = 0; y < 36; ++y)
    for (int x = 0; x < 48; ++x) img.at(x, y) = rng.uniform(0, y * 48 + x, 0.0, 100.0);
  const ScalarImage out = undistort_image(img, cam);

  int outside = 0;
  for (int y = 0; y < 36; ++y)
    for (int x = 0; x < 48; ++x) {
      const Point2 nd =
          distort_normalised(cam, Point2((x - cam.cx) / cam.fx, (y - cam.cy) / cam.fy));
      const double su = cam.fx * nd.x() + cam.cx;
      const double sv = cam.fy * nd.y() + cam.cy;
      if (su >= 0.0 && sv >= 0.0 && su <= 47.0 && sv <= 35.0) {
        CHECK(out.at(x, y) == doctest::Approx(bilinear_sample(img, su, sv)).epsilon(1e-12));
      } else {
        ++outside;
        CHECK(out.at(x, y) == 0.0);
      }
    }
  CHECK(outside > 0);  // the corners really do leave the support
}
