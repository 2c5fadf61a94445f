#include <doctest.h>

#include <cmath>
#include <vector>

#include "tcal/detector.hpp"
#include "tcal/errors.hpp"
#include "tcal/image_ops.hpp"
#include "tcal/rng.hpp"
#include "tcal/synth.hpp"

using namespace tcal;

namespace {

// Ground-truth corner comparison on a rendered frame: mean distance over the
// nodes the detector found, plus the count.
struct Accuracy {
  double mean_err = 0.0;
  int found = 0;
};

Accuracy compare_to_truth(const CornerGrid& got, const SceneConfig& cfg, int view) {
  SceneConfig clean = cfg;
  clean.noise_sigma_tir_px = 0.0;  // exact projections
  const CornerGrid truth = project_corners_tir(clean, view);
  Accuracy acc;
  double sum = 0.0;
  for (int r = 0; r < got.rows; ++r)
    for (int c = 0; c < got.cols; ++c) {
      if (!got.at(r, c).has_value()) continue;
      REQUIRE(truth.at(r, c).has_value());
      sum += (*got.at(r, c) - *truth.at(r, c)).norm();
      ++acc.found;
    }
  acc.mean_err = acc.found ? sum / acc.found : 0.0;
  return acc;
}

CornerGrid perfect_lattice(int rows, int cols, double px, double py) {
  CornerGrid g(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) g.at(r, c) = Point2((c + 1) * px, (r + 1) * py);
  return g;
}

}  // namespace

TEST_CASE("board localisation finds a quad around the true outline") {
  const SceneConfig cfg = make_session("nominal", 3);
  const ScalarImage frame = render_tir_frame(cfg, 0);
  const ScalarImage norm = percentile_normalize(frame);
  const QuadROI roi = estimate_roi(norm, cfg.board);

  // The interior corner lattice must sit strictly inside the quad: check via
  // the rectifying homography all corners map into the unit rectangle.
  const CornerGrid truth = project_corners_tir(cfg, 0);
  double min_x = 1e9, max_x = -1e9, min_y = 1e9, max_y = -1e9;
  for (const auto& node : truth.nodes) {
    min_x = std::min(min_x, node->x());
    max_x = std::max(max_x, node->x());
    min_y = std::min(min_y, node->y());
    max_y = std::max(max_y, node->y());
  }
  double qmin_x = 1e9, qmax_x = -1e9, qmin_y = 1e9, qmax_y = -1e9;
  for (const auto& c : roi.corners) {
    qmin_x = std::min(qmin_x, c.x());
    qmax_x = std::max(qmax_x, c.x());
    qmin_y = std::min(qmin_y, c.y());
    qmax_y = std::max(qmax_y, c.y());
  }
  CHECK(qmin_x < min_x);
  CHECK(qmax_x > max_x);
  CHECK(qmin_y < min_y);
  CHECK(qmax_y > max_y);
  CHECK(roi.pitch_x > 2.0);
  CHECK(roi.pitch_y > 2.0);
}

TEST_CASE("saddle response peaks at the saddle of a quadratic surface") {
  // I = (x - x0)(y - y0), a pure saddle: ixy = 64, ixx = iyy = 0, so the
  // normalised response is 1 at the saddle row/column and falls off with the
  // blur window elsewhere only via border effects. Use the peak location.
  const double x0 = 14.3, y0 = 11.7;
  ScalarImage img(30, 24);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) img.at(x, y) = (x - x0) * (y - y0) / 100.0;
  const ScalarImage resp = saddle_response(img, 8.0, 8.0);
  REQUIRE(resp.width == img.width);
  // response is non-negative and normalised
  double peak = 0.0;
  for (double v : resp.data) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0 + 1e-12);
    peak = std::max(peak, v);
  }
  CHECK(peak == doctest::Approx(1.0));
}

TEST_CASE("checkerboard saddle response peaks near every interior corner") {
  // A synthetic rectified board patch: squares of pitch 12 px.
  const double pitch = 12.0;
  ScalarImage img(8 * 12, 4 * 12);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const int i = static_cast<int>(x / pitch), j = static_cast<int>(y / pitch);
      img.at(x, y) = (i + j) % 2 == 0 ? 1.0 : 0.0;
    }
  const ScalarImage resp = saddle_response(img, pitch, pitch);
  for (int r = 1; r < 4; ++r)
    for (int c = 1; c < 8; ++c) {
      // max response within 2 px of the lattice corner
      const double cx = c * pitch - 0.5, cy = r * pitch - 0.5;
      double best = 0.0;
      for (int dy = -2; dy <= 2; ++dy)
        for (int dx = -2; dx <= 2; ++dx)
          best = std::max(best, resp.at_clamped(static_cast<int>(cx) + dx,
                                                static_cast<int>(cy) + dy));
      CHECK(best > 0.5);
    }
}

TEST_CASE("mean shift converges to displaced response bumps") {
  // Gaussian bumps at lattice nodes displaced by known sub-pixel offsets.
  BoardSpec spec;
  spec.squares_x = 5;
  spec.squares_y = 4;
  const double px = 16.0, py = 16.0;
  const int rows = spec.corner_rows(), cols = spec.corner_cols();
  ScalarImage resp(static_cast<int>(px * (cols + 2)), static_cast<int>(py * (rows + 2)));
  std::vector<Point2> truth;
  CounterRng rng(9);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const Point2 centre((c + 1) * px + rng.uniform(1, (r * cols + c) * 2ull, -1.5, 1.5),
                          (r + 1) * py + rng.uniform(1, (r * cols + c) * 2ull + 1, -1.5, 1.5));
      truth.push_back(centre);
      for (int y = 0; y < resp.height; ++y)
        for (int x = 0; x < resp.width; ++x)
          resp.at(x, y) += std::exp(-0.5 * (Point2(x, y) - centre).squaredNorm() / 4.0);
    }
  const CornerGrid grid = mean_shift_corners(resp, spec, px, py);
  REQUIRE(grid.rows == rows);
  REQUIRE(grid.cols == cols);
  CHECK(grid.present_count() == rows * cols);
  // the walk lands on the bump up to the integer-window truncation bias
  double sum_err = 0.0;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      REQUIRE(grid.at(r, c).has_value());
      const double err = (*grid.at(r, c) - truth[static_cast<size_t>(r) * cols + c]).norm();
      CHECK(err < 0.25);
      sum_err += err;
    }
  CHECK(sum_err / (rows * cols) < 0.12);
}

TEST_CASE("mean shift drops nodes without nearby response") {
  BoardSpec spec;
  spec.squares_x = 5;
  spec.squares_y = 4;
  const double px = 16.0, py = 16.0;
  ScalarImage resp(static_cast<int>(px * 5), static_cast<int>(py * 4), 0.0);
  // single bump at node (1, 1) only
  const Point2 centre(2 * px, 2 * py);
  for (int y = 0; y < resp.height; ++y)
    for (int x = 0; x < resp.width; ++x)
      resp.at(x, y) = std::exp(-0.5 * (Point2(x, y) - centre).squaredNorm() / 4.0);
  const CornerGrid grid = mean_shift_corners(resp, spec, px, py);
  CHECK(grid.present_count() == 1);
  CHECK(grid.at(1, 1).has_value());
}

TEST_CASE("quality gate accepts a perfect lattice and reports its statistics") {
  BoardSpec spec;
  spec.squares_x = 8;
  spec.squares_y = 4;
  const CornerGrid grid = perfect_lattice(3, 7, 12.0, 12.0);
  const GateReport rep = quality_gate(grid, 12.0, 12.0);
  CHECK(rep.accepted);
  CHECK(rep.n_detected == 21);
  CHECK(rep.cv_area == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(rep.area_ratio == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_FALSE(rep.adjacent_missing);
}

TEST_CASE("quality gate rejects adjacent missing corners") {
  const CornerGrid full = perfect_lattice(3, 7, 12.0, 12.0);

  // one missing interior node: no adjacent pair, still accepted
  CornerGrid one = full;
  one.at(1, 3).reset();
  CHECK(quality_gate(one, 12.0, 12.0).accepted);
  CHECK_FALSE(quality_gate(one, 12.0, 12.0).adjacent_missing);

  // two horizontally adjacent missing nodes: rejected
  CornerGrid horiz = full;
  horiz.at(1, 3).reset();
  horiz.at(1, 4).reset();
  const GateReport rh = quality_gate(horiz, 12.0, 12.0);
  CHECK(rh.adjacent_missing);
  CHECK_FALSE(rh.accepted);

  // two vertically adjacent missing nodes: rejected
  CornerGrid vert = full;
  vert.at(0, 5).reset();
  vert.at(1, 5).reset();
  CHECK(quality_gate(vert, 12.0, 12.0).adjacent_missing);
  CHECK_FALSE(quality_gate(vert, 12.0, 12.0).accepted);

  // two missing nodes on a diagonal are not "adjacent"
  CornerGrid diag = full;
  diag.at(0, 2).reset();
  diag.at(1, 3).reset();
  CHECK_FALSE(quality_gate(diag, 12.0, 12.0).adjacent_missing);
  CHECK(quality_gate(diag, 12.0, 12.0).accepted);
}

TEST_CASE("quality gate rejects area mismatch and jitter") {
  // lattice at half the expected pitch: triangle areas 4x too small
  const CornerGrid small = perfect_lattice(3, 7, 6.0, 6.0);
  const GateReport rs = quality_gate(small, 12.0, 12.0);
  CHECK(rs.area_ratio == doctest::Approx(0.25).epsilon(1e-9));
  CHECK_FALSE(rs.accepted);

  // heavy jitter: area coefficient of variation blows past the gate
  CornerGrid noisy = perfect_lattice(3, 7, 12.0, 12.0);
  CounterRng rng(21);
  for (size_t i = 0; i < noisy.nodes.size(); ++i)
    *noisy.nodes[i] += Point2(rng.uniform(1, 2 * i, -4.0, 4.0), rng.uniform(1, 2 * i + 1, -4.0, 4.0));
  const GateReport rn = quality_gate(noisy, 12.0, 12.0);
  CHECK(rn.cv_area > 0.15);
  CHECK_FALSE(rn.accepted);

  // too few nodes for the minimum triple count
  CornerGrid sparse(3, 7);
  sparse.at(0, 0) = Point2(12, 12);
  sparse.at(0, 1) = Point2(24, 12);
  const GateReport rt = quality_gate(sparse, 12.0, 12.0);
  CHECK_FALSE(rt.accepted);
  CHECK(std::isinf(rt.cv_area));
}

TEST_CASE("grid projection back to the native frame inverts the rectification") {
  const std::array<Point2, 4> src = {Point2(10, 8), Point2(60, 12), Point2(58, 44), Point2(8, 40)};
  const std::array<Point2, 4> dst = {Point2(0, 0), Point2(48, 0), Point2(48, 24), Point2(0, 24)};
  const Homography h = homography_from_quad(src, dst);
  const double kappa = 4.0;

  CornerGrid rect_grid(2, 3);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 3; ++c) rect_grid.at(r, c) = Point2((c + 1) * 12.0 * kappa, (r + 1) * 8.0 * kappa);
  const CornerGrid native = project_to_original(rect_grid, h, kappa, 80, 62);
  const Homography inv = h.inverse();
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 3; ++c) {
      REQUIRE(native.at(r, c).has_value());
      const Point2 want = inv.apply(*rect_grid.at(r, c) / kappa);
      CHECK((*native.at(r, c) - want).norm() < 1e-9);
    }
}

TEST_CASE("noise-free detection recovers nearly all corners to sub-pixel accuracy") {
  SceneConfig cfg = make_session("nominal", 1);
  cfg.noise_sigma_tir = 0.0;  // clean render
  for (int view : {0, 3, 7}) {
    const ScalarImage frame = render_tir_frame(cfg, view);
    const DetectionResult det = detect_corners(frame, cfg.board);
    CHECK(det.report.accepted);
    const Accuracy acc = compare_to_truth(det.grid, cfg, view);
    CHECK(acc.found >= 20);
    CHECK(acc.mean_err < 0.15);
  }
}

TEST_CASE("detection is equivariant to affine intensity changes") {
  SceneConfig cfg = make_session("nominal", 2);
  cfg.noise_sigma_tir = 0.0;
  const ScalarImage frame = render_tir_frame(cfg, 1);
  ScalarImage rescaled = frame;
  for (double& v : rescaled.data) v = 3.5 * v + 40.0;
  const DetectionResult a = detect_corners(frame, cfg.board);
  const DetectionResult b = detect_corners(rescaled, cfg.board);
  REQUIRE(a.report.accepted);
  REQUIRE(b.report.accepted);
  REQUIRE(a.grid.present_count() == b.grid.present_count());
  for (size_t i = 0; i < a.grid.nodes.size(); ++i) {
    REQUIRE(a.grid.nodes[i].has_value() == b.grid.nodes[i].has_value());
    if (a.grid.nodes[i])
      CHECK((*a.grid.nodes[i] - *b.grid.nodes[i]).norm() < 1e-9);
  }
}

TEST_CASE("detection works on inverted polarity (cold board on warm scene)") {
  SceneConfig cfg = make_session("nominal", 4);
  cfg.noise_sigma_tir = 0.0;
  ScalarImage frame = render_tir_frame(cfg, 2);
  for (double& v : frame.data) v = 255.0 - v;
  const DetectionResult det = detect_corners(frame, cfg.board);
  CHECK(det.report.accepted);
  CHECK(det.report.polarity == "dark");
  const Accuracy acc = compare_to_truth(det.grid, cfg, 2);
  CHECK(acc.found >= 20);
  CHECK(acc.mean_err < 0.15);
}

TEST_CASE("detection failure carries the stage that gave up") {
  const BoardSpec board = make_session("nominal", 0).board;
  // constant frame: normalisation cannot stretch it
  ScalarImage flat(80, 62, 50.0);
  CHECK_THROWS_WITH_AS(detect_corners(flat, board), doctest::Contains("normalise"),
                       DetectionFailed);
  // pure noise: either no stage completes, or whatever grid comes out is
  // rejected by the quality gate
  ScalarImage noise(80, 62);
  CounterRng rng(55);
  for (size_t i = 0; i < noise.data.size(); ++i) noise.data[i] = rng.uniform(1, i, 0.0, 255.0);
  try {
    const DetectionResult det = detect_corners(noise, board);
    CHECK_FALSE(det.report.accepted);
  } catch (const DetectionFailed&) {
    CHECK(true);
  }
}

TEST_CASE("debug output matches the plain detection result") {
  SceneConfig cfg = make_session("nominal", 5);
  const ScalarImage frame = render_tir_frame(cfg, 6);
  DetectionDebug dbg;
  const DetectionResult a = detect_corners(frame, cfg.board);
  const DetectionResult b = detect_corners_debug(frame, cfg.board, {}, &dbg);
  CHECK(a.report.accepted == b.report.accepted);
  REQUIRE(a.grid.nodes.size() == b.grid.nodes.size());
  for (size_t i = 0; i < a.grid.nodes.size(); ++i) {
    REQUIRE(a.grid.nodes[i].has_value() == b.grid.nodes[i].has_value());
    if (a.grid.nodes[i]) CHECK(*a.grid.nodes[i] == *b.grid.nodes[i]);
  }
  CHECK(dbg.normalised.width == 80);
  CHECK(dbg.response.pixel_count() > 0);
  CHECK(dbg.rect.pitch_x > 0.0);
}
