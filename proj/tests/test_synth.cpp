#include <doctest.h>

#include <cmath>
#include <vector>

#include "tcal/errors.hpp"
#include "tcal/image_ops.hpp"
#include "tcal/synth.hpp"
#include "tcal/targets.hpp"

using namespace tcal;

namespace {

// Single frontal board filling most of the thermal frame at 2 m, no rig
// offset and no noise: the cleanest stage for photometric checks.
SceneConfig frontal_scene() {
  SceneConfig cfg = make_session("nominal", 1);
  cfg.stereo = StereoExtrinsics{};
  cfg.noise_sigma_tir = 0.0;
  cfg.noise_sigma_rgb_px = 0.0;
  cfg.noise_sigma_tir_px = 0.0;
  BoardPose pose;
  pose.tvec = Vec3(-0.45, -0.15, 2.0);  // board centre on the optical axis
  cfg.poses.assign(1, pose);
  return cfg;
}

double inclination_deg(const BoardPose& pose) {
  const Vec3 n = rodrigues(pose.rvec).col(2);
  return std::acos(std::min(1.0, std::abs(n.z()))) * 180.0 / M_PI;
}

double centre_depth(const SceneConfig& cfg, const BoardPose& pose) {
  const Point3 centre((cfg.board.squares_x - 2) * 0.5 * cfg.board.square_size,
                      (cfg.board.squares_y - 2) * 0.5 * cfg.board.square_size, 0.0);
  return (rodrigues(pose.rvec) * centre + pose.tvec).z();
}

}  // namespace

TEST_CASE("frame_name is zero-padded and stable") {
  CHECK(frame_name(0) == "frame_0000");
  CHECK(frame_name(123) == "frame_0123");
}

TEST_CASE("make_session pins the rig ground truth") {
  const SceneConfig cfg = make_session("nominal", 42);
  CHECK(cfg.preset_name == "nominal");
  CHECK(cfg.board.squares_x == 8);
  CHECK(cfg.board.squares_y == 4);
  CHECK(cfg.board.square_size == 0.15);

  CHECK(cfg.k_tir.fx == 107.56);
  CHECK(cfg.k_tir.fy == 109.81);
  CHECK(cfg.k_tir.cx == 42.6);
  CHECK(cfg.k_tir.cy == 35.75);
  CHECK(cfg.k_tir.k1 == -0.11);
  CHECK(cfg.k_tir.k2 == -0.01);
  CHECK(cfg.k_tir.width == 80);
  CHECK(cfg.k_tir.height == 62);

  CHECK(cfg.k_rgb.fx == 1580.0);
  CHECK(cfg.k_rgb.fy == 1580.0);
  CHECK(cfg.k_rgb.fy_equals_fx);
  CHECK(cfg.k_rgb.cx == 1014.0);
  CHECK(cfg.k_rgb.cy == 760.0);
  CHECK(cfg.k_rgb.k1 == 0.0);
  CHECK(cfg.k_rgb.width == 2028);
  CHECK(cfg.k_rgb.height == 1520);

  CHECK(cfg.stereo.tvec.x() == 0.0327);
  CHECK(cfg.stereo.tvec.y() == 0.0004);
  CHECK(cfg.stereo.tvec.z() == 0.0);
  CHECK(cfg.stereo.rvec.norm() == doctest::Approx(3.88 * M_PI / 180.0).epsilon(1e-15));

  CHECK(cfg.blur_sigma_tir == 0.7);
  CHECK(cfg.contrast_lo == 120.0);
  CHECK(cfg.contrast_hi == 200.0);

  CHECK_THROWS_AS(make_session("typo", 1), UnknownPreset);
}

TEST_CASE("preset pose envelopes hold across seeds") {
  for (std::uint64_t seed : {1, 7, 31}) {
    const SceneConfig nom = make_session("nominal", seed);
    CHECK(nom.poses.size() == 36);
    CHECK(nom.noise_sigma_tir == 1.6);
    CHECK(nom.noise_sigma_rgb_px == 0.05);
    CHECK(nom.noise_sigma_tir_px == 0.015);
    for (const auto& pose : nom.poses) {
      CHECK(inclination_deg(pose) <= 45.0 + 1e-9);
      const double z = centre_depth(nom, pose);
      CHECK(z >= 1.0);
      CHECK(z <= 3.0);
    }

    const SceneConfig deg = make_session("degenerate-frontal", seed);
    CHECK(deg.poses.size() == 24);
    CHECK(deg.noise_sigma_tir_px == 0.5);
    for (const auto& pose : deg.poses) {
      CHECK(inclination_deg(pose) <= 10.0);
      CHECK(inclination_deg(pose) >= 0.99);
      const double z = centre_depth(deg, pose);
      CHECK(z >= 1.8);
      CHECK(z <= 3.0);
    }

    // The high-noise tier only turns the noise up; geometry is shared with
    // the nominal protocol draw for draw.
    const SceneConfig loud = make_session("high-noise", seed);
    CHECK(loud.noise_sigma_tir == 3.0 * nom.noise_sigma_tir);
    CHECK(loud.noise_sigma_tir_px == 3.0 * nom.noise_sigma_tir_px);
    CHECK(loud.noise_sigma_rgb_px == nom.noise_sigma_rgb_px);
    REQUIRE(loud.poses.size() == nom.poses.size());
    for (size_t i = 0; i < nom.poses.size(); ++i) {
      CHECK(loud.poses[i].rvec == nom.poses[i].rvec);
      CHECK(loud.poses[i].tvec == nom.poses[i].tvec);
    }
  }
}

TEST_CASE("renders and corner sets are bit-exact replays of the seed") {
  const SceneConfig a = make_session("nominal", 9);
  const SceneConfig b = make_session("nominal", 9);
  const ScalarImage img_a = render_tir_frame(a, 0);
  const ScalarImage img_b = render_tir_frame(b, 0);
  REQUIRE(img_a.width == img_b.width);
  for (size_t i = 0; i < img_a.data.size(); ++i) CHECK(img_a.data[i] == img_b.data[i]);

  const CornerGrid tir_a = project_corners_tir(a, 2);
  const CornerGrid tir_b = project_corners_tir(b, 2);
  for (size_t i = 0; i < tir_a.nodes.size(); ++i) {
    CHECK(tir_a.nodes[i]->x() == tir_b.nodes[i]->x());
    CHECK(tir_a.nodes[i]->y() == tir_b.nodes[i]->y());
  }
  const RGBCornerSet rgb_a = project_corners_rgb(a, 2);
  const RGBCornerSet rgb_b = project_corners_rgb(b, 2);
  for (size_t i = 0; i < rgb_a.corners.size(); ++i)
    CHECK(rgb_a.corners[i].point == rgb_b.corners[i].point);

  // A different seed moves the poses, so the first frame cannot survive.
  const SceneConfig c = make_session("nominal", 10);
  const ScalarImage img_c = render_tir_frame(c, 0);
  bool any_differs = false;
  for (size_t i = 0; i < img_a.data.size() && !any_differs; ++i)
    any_differs = img_a.data[i] != img_c.data[i];
  CHECK(any_differs);
}

TEST_CASE("rendered squares hit the contrast levels at their centres") {
  const SceneConfig cfg = frontal_scene();
  const ScalarImage img = render_tir_frame(cfg, 0);
  const BoardPose& pose = cfg.poses[0];
  const double s = cfg.board.square_size;

  // Square (i, j) spans [(i-1)s, is) x [(j-1)s, js) in board coordinates;
  // (i + j) even renders white. Centres sit ~4 px from any edge at this
  // range, far enough that the 0.7 px blur cannot reach them.
  auto centre_value = [&](int i, int j) {
    const Vec3 on_board((i - 0.5) * s, (j - 0.5) * s, 0.0);
    const Point2 px = project_points(cfg.k_tir, pose, {Point3(on_board)})[0];
    return bilinear_sample(img, px.x(), px.y());
  };
  CHECK(centre_value(3, 1) == doctest::Approx(200.0).epsilon(0.01));  // white
  CHECK(centre_value(4, 1) == doctest::Approx(120.0).epsilon(0.01));  // black
  CHECK(centre_value(4, 2) == doctest::Approx(200.0).epsilon(0.01));
  CHECK(centre_value(3, 2) == doctest::Approx(120.0).epsilon(0.01));

  // Away from the panel the scene floor sits well below the black level.
  CHECK(img.at(1, 1) < 30.0);
}

TEST_CASE("every interior corner shows the checker saddle pattern") {
  const SceneConfig cfg = frontal_scene();
  const ScalarImage img = render_tir_frame(cfg, 0);
  const BoardPose& pose = cfg.poses[0];
  const double d = 0.35 * cfg.board.square_size;

  for (int r = 0; r < cfg.board.corner_rows(); ++r)
    for (int c = 0; c < cfg.board.corner_cols(); ++c) {
      const Point3 corner = object_point(cfg.board, r, c);
      auto sample = [&](double dx, double dy) {
        const Point2 px = project_points(cfg.k_tir, pose,
                                         {Point3(corner.x() + dx, corner.y() + dy, 0.0)})[0];
        return bilinear_sample(img, px.x(), px.y());
      };
      const double diag = sample(d, d) + sample(-d, -d);
      const double anti = sample(d, -d) + sample(-d, d);
      // The (+,+) quadrant of corner (r, c) lies in square (c+1, r+1), white
      // when (r + c) is even.
      const double signed_gap = (r + c) % 2 == 0 ? diag - anti : anti - diag;
      CHECK(signed_gap > 100.0);
    }
}

TEST_CASE("projected corners invert exactly through image_to_board") {
  SceneConfig cfg = make_session("nominal", 5);
  cfg.noise_sigma_tir_px = 0.0;
  for (int view : {0, 7, 19}) {
    const CornerGrid grid = project_corners_tir(cfg, view);
    for (int r = 0; r < grid.rows; ++r)
      for (int c = 0; c < grid.cols; ++c) {
        const Point2 lattice = image_to_board(cfg, view, *grid.at(r, c));
        CHECK(lattice.x() == doctest::Approx(c).epsilon(1e-6));
        CHECK(lattice.y() == doctest::Approx(r).epsilon(1e-6));
      }
  }

  // A board seen edge-on leaves the ray parallel to the plane.
  SceneConfig side = frontal_scene();
  side.poses[0].rvec = Vec3(0.0, M_PI / 2.0, 0.0);
  CHECK_THROWS_AS(image_to_board(side, 0, Point2(side.k_tir.cx, side.k_tir.cy)),
                  NumericalError);
}

TEST_CASE("dense visible lattice rides on the thermal lattice at odd indices") {
  SceneConfig cfg = make_session("nominal", 5);
  cfg.noise_sigma_rgb_px = 0.0;
  const RGBCornerSet set = project_corners_rgb(cfg, 0);
  const int nx = 2 * cfg.board.squares_x - 1;
  CHECK(set.corners.size() == static_cast<size_t>(nx) * (2 * cfg.board.squares_y - 1));

  for (int r = 0; r < cfg.board.corner_rows(); ++r)
    for (int c = 0; c < cfg.board.corner_cols(); ++c) {
      const RGBCorner& corner = set.corners[static_cast<size_t>(2 * r + 1) * nx + (2 * c + 1)];
      CHECK(corner.x_idx == 2 * c + 1);
      CHECK(corner.y_idx == 2 * r + 1);
      const Point2 direct =
          project_points(cfg.k_rgb, cfg.poses[0], {object_point(cfg.board, r, c)})[0];
      CHECK(corner.point.x() == doctest::Approx(direct.x()).epsilon(1e-14));
      CHECK(corner.point.y() == doctest::Approx(direct.y()).epsilon(1e-14));
    }
}

TEST_CASE("noise amplitudes match their configured sigmas") {
  SUBCASE("frame intensity noise") {
    SceneConfig cfg = frontal_scene();
    const ScalarImage clean = render_tir_frame(cfg, 0);
    cfg.noise_sigma_tir = 1.6;
    const ScalarImage noisy = render_tir_frame(cfg, 0);
    double sum = 0.0, sq = 0.0;
    const size_t n = clean.data.size();
    for (size_t i = 0; i < n; ++i) {
      const double d = noisy.data[i] - clean.data[i];
      sum += d;
      sq += d * d;
    }
    const double mean = sum / n;
    const double std_dev = std::sqrt(sq / n - mean * mean);
    CHECK(std::abs(mean) < 0.1);
    CHECK(std_dev == doctest::Approx(1.6).epsilon(0.04));
  }

  SUBCASE("per-point corner jitter") {
    const SceneConfig noisy = make_session("degenerate-frontal", 3);
    SceneConfig clean = noisy;
    clean.noise_sigma_tir_px = 0.0;
    double sum = 0.0, sq = 0.0;
    size_t n = 0;
    for (size_t v = 0; v < noisy.poses.size(); ++v) {
      const CornerGrid a = project_corners_tir(noisy, static_cast<int>(v));
      const CornerGrid b = project_corners_tir(clean, static_cast<int>(v));
      for (size_t i = 0; i < a.nodes.size(); ++i) {
        for (double d : {a.nodes[i]->x() - b.nodes[i]->x(), a.nodes[i]->y() - b.nodes[i]->y()}) {
          sum += d;
          sq += d * d;
          ++n;
        }
      }
    }
    const double mean = sum / n;
    const double std_dev = std::sqrt(sq / n - mean * mean);
    CHECK(std::abs(mean) < 0.05);
    CHECK(std_dev == doctest::Approx(0.5).epsilon(0.08));
  }
}

TEST_CASE("out-of-view boards and bad inputs are rejected") {
  SceneConfig cfg = make_session("nominal", 1);
  cfg.poses[0].tvec = Vec3(-0.45, -0.15, 0.5);  // the panel overflows the frame
  CHECK_THROWS_AS(render_tir_frame(cfg, 0), BoardOutOfView);
  CHECK_THROWS_AS(project_corners_tir(cfg, 0), BoardOutOfView);
  CHECK_THROWS_AS(project_corners_rgb(cfg, 0), BoardOutOfView);

  const SceneConfig ok = make_session("nominal", 1);
  CHECK_THROWS_AS(render_tir_frame(ok, -1), ValidationError);
  CHECK_THROWS_AS(render_tir_frame(ok, 36), ValidationError);

  SceneConfig inverted = frontal_scene();
  inverted.contrast_lo = inverted.contrast_hi;
  CHECK_THROWS_AS(render_tir_frame(inverted, 0), ValidationError);
}
