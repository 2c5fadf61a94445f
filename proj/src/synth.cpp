#include "tcal/synth.hpp"

#include <cmath>
#include <cstdio>

#include <Eigen/Geometry>

#include "tcal/errors.hpp"
#include "tcal/image_ops.hpp"
#include "tcal/rng.hpp"

namespace tcal {
namespace {

// Stream ids for the counter generator; draws never collide across purposes
// or views.
constexpr std::uint64_t kStreamPose = 1;
constexpr std::uint64_t kStreamFrameNoise = 2;
constexpr std::uint64_t kStreamRgbNoise = 3;
constexpr std::uint64_t kStreamTirNoise = 4;

std::uint64_t stream_id(std::uint64_t kind, int view_idx) {
  return (kind << 32) | static_cast<std::uint32_t>(view_idx);
}

// Pattern value on the board plane, in board coordinates (origin at the
// first interior corner). White squares are 1, black 0; the surround sits
// well below black so segmentation sees the panel against a colder scene.
constexpr double kBackgroundPattern = -1.5;

double pattern_value(const BoardSpec& board, double bx, double by) {
  const int i = static_cast<int>(std::floor(bx / board.square_size)) + 1;
  const int j = static_cast<int>(std::floor(by / board.square_size)) + 1;
  if (i < 0 || i >= board.squares_x || j < 0 || j >= board.squares_y) return kBackgroundPattern;
  return (i + j) % 2 == 0 ? 1.0 : 0.0;
}

void check_view_index(const SceneConfig& cfg, int view_idx) {
  if (view_idx < 0 || static_cast<size_t>(view_idx) >= cfg.poses.size())
    throw ValidationError("synth: view index out of range");
  if (!(cfg.contrast_lo < cfg.contrast_hi))
    throw ValidationError("synth: contrast_lo must be below contrast_hi");
}

// Board pose composed into the TIR frame.
BoardPose tir_pose(const SceneConfig& cfg, int view_idx) {
  const Mat3 r_s = rodrigues(cfg.stereo.rvec);
  const Mat3 r_b = rodrigues(cfg.poses[view_idx].rvec);
  BoardPose composed;
  composed.rvec = rodrigues_inv(r_s * r_b);
  composed.tvec = r_s * cfg.poses[view_idx].tvec + cfg.stereo.tvec;
  return composed;
}

std::vector<Point3> board_outer_corners(const BoardSpec& board) {
  const double s = board.square_size;
  const double x1 = (board.squares_x - 1) * s;
  const double y1 = (board.squares_y - 1) * s;
  return {Point3(-s, -s, 0), Point3(x1, -s, 0), Point3(x1, y1, 0), Point3(-s, y1, 0)};
}

// True when all four outer board corners project inside the frame with the
// given margin.
bool board_in_view(const CameraModel& cam, const BoardPose& pose, const BoardSpec& board,
                   double margin) {
  try {
    const std::vector<Point2> pts = project_points(cam, pose, board_outer_corners(board));
    for (const auto& p : pts) {
      if (p.x() < margin || p.y() < margin || p.x() > cam.width - 1 - margin ||
          p.y() > cam.height - 1 - margin)
        return false;
    }
  } catch (const BehindCamera&) {
    return false;
  }
  return true;
}

void require_in_view(const SceneConfig& cfg, int view_idx) {
  if (!board_in_view(cfg.k_rgb, cfg.poses[view_idx], cfg.board, 1.0) ||
      !board_in_view(cfg.k_tir, tir_pose(cfg, view_idx), cfg.board, 1.0))
    throw BoardOutOfView("view " + frame_name(view_idx) + " leaves a sensor frame");
}

struct PoseRanges {
  double z_min, z_max;          // board-centre distance, m
  double tilt_min, tilt_max;    // inclination of the board normal, rad
  double roll_max;              // rad
  double off_x, off_y;          // lateral centre offset, normalised coords
};

// Draws poses until the whole board is visible to both cameras (stricter
// margin than the renderers enforce, so blur never touches the border).
std::vector<BoardPose> sample_poses(const SceneConfig& cfg, int n_views, const PoseRanges& pr) {
  const CounterRng rng(cfg.seed);
  const Point3 centre_board((cfg.board.squares_x - 2) * 0.5 * cfg.board.square_size,
                            (cfg.board.squares_y - 2) * 0.5 * cfg.board.square_size, 0.0);
  std::vector<BoardPose> poses;
  for (int view = 0; view < n_views; ++view) {
    const std::uint64_t stream = stream_id(kStreamPose, view);
    bool placed = false;
    for (std::uint64_t attempt = 0; attempt < 4096 && !placed; ++attempt) {
      const std::uint64_t c = attempt * 8;
      const double tilt = rng.uniform(stream, c + 0, pr.tilt_min, pr.tilt_max);
      const double axis_ang = rng.uniform(stream, c + 1, 0.0, 2.0 * M_PI);
      const double roll = rng.uniform(stream, c + 2, -pr.roll_max, pr.roll_max);
      const double z = rng.uniform(stream, c + 3, pr.z_min, pr.z_max);
      const double ox = rng.uniform(stream, c + 4, -pr.off_x, pr.off_x);
      const double oy = rng.uniform(stream, c + 5, -pr.off_y, pr.off_y);

      // Tilt about an in-plane axis keeps the inclination exactly `tilt`,
      // then roll spins the board in its own plane.
      const Vec3 tilt_axis(std::cos(axis_ang), std::sin(axis_ang), 0.0);
      const Mat3 r = (Eigen::AngleAxisd(tilt, tilt_axis) *
                      Eigen::AngleAxisd(roll, Vec3::UnitZ()))
                         .toRotationMatrix();
      BoardPose pose;
      pose.rvec = rodrigues_inv(r);
      pose.tvec = Vec3(ox * z, oy * z, z) - r * centre_board;

      SceneConfig probe = cfg;
      probe.poses.assign(1, pose);
      if (board_in_view(probe.k_rgb, pose, probe.board, 4.0) &&
          board_in_view(probe.k_tir, tir_pose(probe, 0), probe.board, 4.0)) {
        poses.push_back(pose);
        placed = true;
      }
    }
    if (!placed)
      throw BoardOutOfView("no visible pose found for view " + std::to_string(view));
  }
  return poses;
}

}  // namespace

std::string frame_name(int view_idx) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%04d", view_idx);
  return buf;
}

ScalarImage render_tir_frame(const SceneConfig& cfg, int view_idx) {
  check_view_index(cfg, view_idx);
  require_in_view(cfg, view_idx);

  const BoardPose pose = tir_pose(cfg, view_idx);
  const Mat3 r = rodrigues(pose.rvec);
  const Vec3 n_plane = r.col(2);
  const double plane_off = n_plane.dot(pose.tvec);
  const Mat3 r_t = r.transpose();

  const int ss = 8;  // supersampling factor per axis
  const CameraModel& cam = cfg.k_tir;
  ScalarImage img(cam.width, cam.height);
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      double acc = 0.0;
      for (int b = 0; b < ss; ++b) {
        const double v = y + (b + 0.5) / ss - 0.5;
        for (int a = 0; a < ss; ++a) {
          const double u = x + (a + 0.5) / ss - 0.5;
          // Cast the pixel ray and intersect the board plane.
          const Point2 nrm = undistorted_normalised(cam, Point2(u, v));
          const Vec3 dir(nrm.x(), nrm.y(), 1.0);
          const double denom = n_plane.dot(dir);
          double value = kBackgroundPattern;
          if (std::abs(denom) > 1e-12) {
            const double t = plane_off / denom;
            if (t > 0.0) {
              const Vec3 on_board = r_t * (t * dir - pose.tvec);
              value = pattern_value(cfg.board, on_board.x(), on_board.y());
            }
          }
          acc += value;
        }
      }
      img.at(x, y) = acc / (ss * ss);
    }
  }

  img = gaussian_blur(img, cfg.blur_sigma_tir);

  const double span = cfg.contrast_hi - cfg.contrast_lo;
  const CounterRng rng(cfg.seed);
  const std::uint64_t stream = stream_id(kStreamFrameNoise, view_idx);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double v = cfg.contrast_lo + img.at(x, y) * span;
      if (cfg.noise_sigma_tir > 0.0)
        v += cfg.noise_sigma_tir *
             rng.normal(stream, static_cast<std::uint64_t>(y) * img.width + x);
      img.at(x, y) = v;
    }
  }
  return img;
}

CornerGrid project_corners_tir(const SceneConfig& cfg, int view_idx) {
  check_view_index(cfg, view_idx);
  require_in_view(cfg, view_idx);
  const BoardPose pose = tir_pose(cfg, view_idx);
  const CounterRng rng(cfg.seed);
  const std::uint64_t stream = stream_id(kStreamTirNoise, view_idx);

  CornerGrid grid(cfg.board.corner_rows(), cfg.board.corner_cols());
  grid.frame_id = frame_name(view_idx);
  const std::vector<Point2> proj = project_points(cfg.k_tir, pose, object_grid(cfg.board));
  int node = 0;
  for (int rr = 0; rr < grid.rows; ++rr) {
    for (int cc = 0; cc < grid.cols; ++cc, ++node) {
      Point2 pt = proj[node];
      if (cfg.noise_sigma_tir_px > 0.0) {
        pt.x() += cfg.noise_sigma_tir_px * rng.normal(stream, 2 * node);
        pt.y() += cfg.noise_sigma_tir_px * rng.normal(stream, 2 * node + 1);
      }
      grid.at(rr, cc) = pt;
    }
  }
  return grid;
}

RGBCornerSet project_corners_rgb(const SceneConfig& cfg, int view_idx) {
  check_view_index(cfg, view_idx);
  require_in_view(cfg, view_idx);
  const BoardPose& pose = cfg.poses[view_idx];
  const CounterRng rng(cfg.seed);
  const std::uint64_t stream = stream_id(kStreamRgbNoise, view_idx);
  const double half = 0.5 * cfg.board.square_size;

  RGBCornerSet set;
  set.frame_id = frame_name(view_idx);
  const int nx = 2 * cfg.board.squares_x - 1;
  const int ny = 2 * cfg.board.squares_y - 1;
  // Dense lattice corner (xi, yi) sits at half-pitch offsets so the odd
  // indices coincide with the thermal lattice.
  std::vector<Point3> object_pts;
  object_pts.reserve(static_cast<size_t>(nx) * ny);
  for (int yi = 0; yi < ny; ++yi)
    for (int xi = 0; xi < nx; ++xi) object_pts.emplace_back((xi - 1) * half, (yi - 1) * half, 0.0);
  const std::vector<Point2> proj = project_points(cfg.k_rgb, pose, object_pts);

  int node = 0;
  for (int yi = 0; yi < ny; ++yi) {
    for (int xi = 0; xi < nx; ++xi, ++node) {
      RGBCorner corner;
      corner.x_idx = xi;
      corner.y_idx = yi;
      corner.point = proj[node];
      if (cfg.noise_sigma_rgb_px > 0.0) {
        corner.point.x() += cfg.noise_sigma_rgb_px * rng.normal(stream, 2 * node);
        corner.point.y() += cfg.noise_sigma_rgb_px * rng.normal(stream, 2 * node + 1);
      }
      set.corners.push_back(corner);
    }
  }
  return set;
}

Point2 image_to_board(const SceneConfig& cfg, int view_idx, const Point2& tir_px) {
  check_view_index(cfg, view_idx);
  const BoardPose pose = tir_pose(cfg, view_idx);
  const Mat3 r = rodrigues(pose.rvec);
  const Vec3 n_plane = r.col(2);
  const double plane_off = n_plane.dot(pose.tvec);

  const Point2 nrm = undistorted_normalised(cfg.k_tir, tir_px);
  const Vec3 dir(nrm.x(), nrm.y(), 1.0);
  const double denom = n_plane.dot(dir);
  if (std::abs(denom) < 1e-12) throw NumericalError("image_to_board: ray parallel to board");
  const Vec3 on_board = r.transpose() * ((plane_off / denom) * dir - pose.tvec);
  return Point2(on_board.x() / cfg.board.square_size, on_board.y() / cfg.board.square_size);
}

SceneConfig make_session(const std::string& preset, std::uint64_t seed) {
  SceneConfig cfg;
  cfg.seed = seed;
  cfg.preset_name = preset;

  cfg.board.squares_x = 8;
  cfg.board.squares_y = 4;
  cfg.board.square_size = 0.15;  // m; a large presentation panel

  cfg.k_tir = CameraModel::tir_preset(80, 62);
  cfg.k_tir.fx = 107.56;
  cfg.k_tir.fy = 109.81;
  cfg.k_tir.cx = 42.6;
  cfg.k_tir.cy = 35.75;
  cfg.k_tir.k1 = -0.11;
  cfg.k_tir.k2 = -0.01;

  cfg.k_rgb = CameraModel::rgb_preset(2028, 1520);
  cfg.k_rgb.fx = cfg.k_rgb.fy = 1580.0;
  cfg.k_rgb.cx = 1014.0;
  cfg.k_rgb.cy = 760.0;

  // Rig ground truth: 32.7 mm baseline almost entirely along x, 3.88 deg
  // rotation about a mostly-vertical axis.
  cfg.stereo.tvec = Vec3(0.0327, 0.0004, 0.0);
  cfg.stereo.rvec = Vec3(0.10, 1.0, 0.05).normalized() * (3.88 * M_PI / 180.0);

  const double deg = M_PI / 180.0;
  int n_views = 0;
  PoseRanges pr{};
  if (preset == "nominal" || preset == "high-noise") {
    n_views = 36;
    pr = PoseRanges{1.0, 3.0, 0.0, 45.0 * deg, 15.0 * deg, 0.15, 0.12};
    cfg.noise_sigma_tir = 1.6;  // 2% of the 80 a.u. contrast span
    // Per-point corner jitter. Kept well below the rendered-frame detector
    // error: these sets stand in for an ideal front end, so solver recovery
    // tests measure the optimiser, not corner statistics. At the rig's focal
    // lengths the narrow-field rotation/translation coupling amplifies TIR
    // corner noise into roughly 25 mm of baseline scatter per pixel of noise,
    // so 0.015 px keeps the constrained solve inside a 0.5 mm envelope.
    cfg.noise_sigma_rgb_px = 0.05;
    cfg.noise_sigma_tir_px = 0.015;
  } else if (preset == "degenerate-frontal") {
    n_views = 24;
    // Near-frontal boards: lateral placement, roll and depth stay diverse
    // enough to pin the in-plane baseline, but without foreshortening the
    // solver trades T_z against board range, so any focal-length bias flows
    // straight into T_z instead of the residuals.
    pr = PoseRanges{1.8, 3.0, 1.0 * deg, 8.0 * deg, 15.0 * deg, 0.11, 0.085};
    cfg.noise_sigma_tir = 1.6;
    cfg.noise_sigma_rgb_px = 0.05;
    cfg.noise_sigma_tir_px = 0.5;
  } else {
    throw UnknownPreset(preset);
  }
  if (preset == "high-noise") {
    cfg.noise_sigma_tir *= 3.0;
    cfg.noise_sigma_tir_px *= 3.0;
  }

  cfg.poses = sample_poses(cfg, n_views, pr);
  return cfg;
}

}  // namespace tcal
