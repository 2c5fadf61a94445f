#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tcal/camera.hpp"
#include "tcal/image.hpp"
#include "tcal/stereo.hpp"

namespace tcal {

// Scene plane n . X = d in the RGB camera frame, normal unit length, sign
// chosen so d > 0 for planes in front of the camera.
struct ScenePlane {
  Vec3 normal = Vec3::UnitZ();
  double d = 1.0;
};

// Plane of a calibration board observed at `pose`: the normal is the third
// column of the rotation, flipped if needed to keep d = n . t positive.
ScenePlane plane_from_pose(const BoardPose& pose);

// Per-pixel depth of the ray-plane intersection under a distortion-free
// model: Z = d / (n_x x' + n_y y' + n_z). Pixels whose denominator is not
// safely positive are invalid and carry 0.
ScalarImage plane_depth(const CameraModel& k_rgb_new, const ScenePlane& plane, int width,
                        int height);

// Pixel lookup maps from the RGB frame into the TIR frame. Entries of
// invalid pixels (no depth, or the transformed point lands behind the TIR
// camera) hold the sentinel -1.
struct RemapMaps {
  ScalarImage map_u;
  ScalarImage map_v;
};
RemapMaps build_remap(const CameraModel& k_rgb_new, const CameraModel& k_tir_new,
                      const StereoExtrinsics& stereo, const ScalarImage& depth);

// Resamples the TIR image at the map coordinates with bilinear weights.
// Samples whose support is not fully inside the TIR image, and pixels with
// invalid map entries, produce 0; when `valid_out` is given it receives a
// 0/1 mask of the pixels that really carry data.
ScalarImage remap_overlay(const ScalarImage& tir_img, const RemapMaps& maps,
                          ScalarImage* valid_out = nullptr);

// Summary statistics of the overlay intensity inside a polygon (even-odd
// rule on pixel centres). Statistics run over valid pixels only; area_pct
// counts every inside pixel against the full image.
struct RoiStats {
  std::string name;
  double area_pct = 0.0;
  double mean = 0.0;
  double median = 0.0;
  double std_dev = 0.0;
  double min = 0.0;
  double max = 0.0;
  int pixel_count = 0;  // valid pixels that entered the statistics
};
RoiStats roi_stats(const ScalarImage& overlay, const std::vector<Point2>& polygon,
                   const ScalarImage* valid_mask = nullptr, const std::string& name = "");

// Iso-intensity contours by marching squares with linear edge interpolation,
// chained into polylines. Ambiguous saddle cells are split by the cell-centre
// average.
std::vector<std::vector<Point2>> marching_squares(const ScalarImage& img, double level);

// Fixed 256-entry pseudocolour table (blue-cyan-yellow-red ramp).
struct Rgb8 {
  std::uint8_t r = 0, g = 0, b = 0;
};
const std::array<Rgb8, 256>& thermal_palette();

// Same intrinsic matrix with the distortion coefficients zeroed: the
// projection model of undistorted images.
CameraModel distortion_free(const CameraModel& cam);

// Resamples a distorted image onto the distortion-free geometry of the same
// K (inverse mapping through the distortion model, bilinear, zero outside).
ScalarImage undistort_image(const ScalarImage& img, const CameraModel& cam);

}  // namespace tcal
