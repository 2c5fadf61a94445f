#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tcal/board.hpp"
#include "tcal/camera.hpp"
#include "tcal/image.hpp"
#include "tcal/stereo.hpp"
#include "tcal/targets.hpp"

namespace tcal {

// Ground-truth scene: rig, cameras, board and per-view poses, all in the RGB
// camera frame (poses are board->RGB; the stereo transform carries points on
// to the TIR camera). Every random quantity is a pure function of the seed.
struct SceneConfig {
  BoardSpec board;
  CameraModel k_rgb;
  CameraModel k_tir;
  StereoExtrinsics stereo;
  std::vector<BoardPose> poses;
  double noise_sigma_tir = 0.0;     // frame intensity noise, a.u.
  double noise_sigma_rgb_px = 0.0;  // per-point noise on projected RGB corners
  double noise_sigma_tir_px = 0.0;  // per-point noise on projected TIR corners
  double blur_sigma_tir = 0.7;      // optics / thermal diffusion proxy, px
  double contrast_lo = 120.0;       // black-square intensity, a.u.
  double contrast_hi = 200.0;       // white-square intensity, a.u.
  std::uint64_t seed = 0;
  std::string preset_name;
};

// Canonical frame identifier shared by frames and corner sets.
std::string frame_name(int view_idx);

// Renders the checkerboard as seen by the TIR camera: 8x supersampled
// inverse projection of the pattern, box-averaged to the sensor grid,
// Gaussian-blurred, mapped to (contrast_lo, contrast_hi), plus seeded
// intensity noise. The surround is rendered colder than the black squares so
// the panel stands out from the scene the way a powered screen does.
// Throws BoardOutOfView when the board's outer corners leave the frame.
ScalarImage render_tir_frame(const SceneConfig& cfg, int view_idx);

// Exact forward projections of the interior corner lattices with per-point
// seeded noise: the thermal (Sx-1) x (Sy-1) grid, and the dense double
// density visible-light lattice of (2Sx-1) x (2Sy-1) corners.
CornerGrid project_corners_tir(const SceneConfig& cfg, int view_idx);
RGBCornerSet project_corners_rgb(const SceneConfig& cfg, int view_idx);

// Maps a TIR pixel back onto the board through the true geometry and returns
// board-lattice coordinates (units of squares). The forward/backward anchor
// for detector accuracy tests.
Point2 image_to_board(const SceneConfig& cfg, int view_idx, const Point2& tir_px);

// Session presets: "nominal" (36 varied views mirroring the acquisition
// protocol), "degenerate-frontal" (near-frontal low-diversity views that
// destabilise the unconstrained depth component), "high-noise" (nominal with
// tripled thermal noise). Throws UnknownPreset otherwise.
SceneConfig make_session(const std::string& preset, std::uint64_t seed);

}  // namespace tcal
