#include "tcal/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <utility>

#include "tcal/errors.hpp"

namespace tcal {
namespace {

bool sample_valid(const ScalarImage& img, double u, double v) {
  return u >= 0.0 && v >= 0.0 && u <= img.width - 1.0 && v <= img.height - 1.0;
}

// Even-odd point-in-polygon test on the pixel centre.
bool inside_polygon(const std::vector<Point2>& poly, double x, double y) {
  bool inside = false;
  const size_t n = poly.size();
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    const bool crosses = (poly[i].y() > y) != (poly[j].y() > y);
    if (!crosses) continue;
    const double x_cross =
        poly[j].x() + (y - poly[j].y()) / (poly[i].y() - poly[j].y()) * (poly[i].x() - poly[j].x());
    if (x < x_cross) inside = !inside;
  }
  return inside;
}

// Interpolated crossing of `level` between two pixel-corner samples.
Point2 edge_point(double x0, double y0, double v0, double x1, double y1, double v1, double level) {
  const double denom = v1 - v0;
  const double t = std::abs(denom) < 1e-300 ? 0.5 : std::clamp((level - v0) / denom, 0.0, 1.0);
  return Point2(x0 + t * (x1 - x0), y0 + t * (y1 - y0));
}

}  // namespace

ScenePlane plane_from_pose(const BoardPose& pose) {
  ScenePlane plane;
  plane.normal = rodrigues(pose.rvec).col(2);
  plane.d = plane.normal.dot(pose.tvec);
  if (plane.d < 0.0) {
    plane.normal = -plane.normal;
    plane.d = -plane.d;
  }
  return plane;
}

ScalarImage plane_depth(const CameraModel& k_rgb_new, const ScenePlane& plane, int width,
                        int height) {
  if (width <= 0 || height <= 0) throw ValidationError("plane_depth: empty output size");
  ScalarImage depth(width, height);
  for (int v = 0; v < height; ++v) {
    const double yn = (v - k_rgb_new.cy) / k_rgb_new.fy;
    for (int u = 0; u < width; ++u) {
      const double xn = (u - k_rgb_new.cx) / k_rgb_new.fx;
      const double denom = plane.normal.x() * xn + plane.normal.y() * yn + plane.normal.z();
      const double z = plane.d / denom;
      depth.at(u, v) = (denom > 1e-9 && z > 0.0) ? z : 0.0;
    }
  }
  return depth;
}

RemapMaps build_remap(const CameraModel& k_rgb_new, const CameraModel& k_tir_new,
                      const StereoExtrinsics& stereo, const ScalarImage& depth) {
  RemapMaps maps{ScalarImage(depth.width, depth.height), ScalarImage(depth.width, depth.height)};
  const Mat3 r = rodrigues(stereo.rvec);
  for (int v = 0; v < depth.height; ++v) {
    const double yn = (v - k_rgb_new.cy) / k_rgb_new.fy;
    for (int u = 0; u < depth.width; ++u) {
      maps.map_u.at(u, v) = -1.0;
      maps.map_v.at(u, v) = -1.0;
      const double z = depth.at(u, v);
      if (z <= 0.0) continue;
      const double xn = (u - k_rgb_new.cx) / k_rgb_new.fx;
      const Vec3 p_rgb(xn * z, yn * z, z);
      const Vec3 p_tir = r * p_rgb + stereo.tvec;
      if (p_tir.z() <= 1e-9) continue;
      const Point2 nd =
          distort_normalised(k_tir_new, Point2(p_tir.x() / p_tir.z(), p_tir.y() / p_tir.z()));
      maps.map_u.at(u, v) = k_tir_new.fx * nd.x() + k_tir_new.cx;
      maps.map_v.at(u, v) = k_tir_new.fy * nd.y() + k_tir_new.cy;
    }
  }
  return maps;
}

ScalarImage remap_overlay(const ScalarImage& tir_img, const RemapMaps& maps,
                          ScalarImage* valid_out) {
  if (maps.map_u.width != maps.map_v.width || maps.map_u.height != maps.map_v.height)
    throw ValidationError("remap_overlay: map size mismatch");
  ScalarImage out(maps.map_u.width, maps.map_u.height);
  if (valid_out) *valid_out = ScalarImage(out.width, out.height);
  for (int v = 0; v < out.height; ++v) {
    for (int u = 0; u < out.width; ++u) {
      const double mu = maps.map_u.at(u, v);
      const double mv = maps.map_v.at(u, v);
      const bool ok = mu >= 0.0 && mv >= 0.0 && sample_valid(tir_img, mu, mv);
      out.at(u, v) = ok ? bilinear_sample(tir_img, mu, mv) : 0.0;
      if (valid_out) valid_out->at(u, v) = ok ? 1.0 : 0.0;
    }
  }
  return out;
}

RoiStats roi_stats(const ScalarImage& overlay, const std::vector<Point2>& polygon,
                   const ScalarImage* valid_mask, const std::string& name) {
  if (polygon.size() < 3) throw ValidationError("roi_stats: polygon needs at least 3 vertices");
  if (valid_mask &&
      (valid_mask->width != overlay.width || valid_mask->height != overlay.height))
    throw ValidationError("roi_stats: mask size mismatch");

  RoiStats stats;
  stats.name = name;
  std::vector<double> values;
  long inside = 0;
  for (int v = 0; v < overlay.height; ++v) {
    for (int u = 0; u < overlay.width; ++u) {
      if (!inside_polygon(polygon, u, v)) continue;
      ++inside;
      if (valid_mask && valid_mask->at(u, v) == 0.0) continue;
      values.push_back(overlay.at(u, v));
    }
  }
  if (values.empty()) throw EmptyRoi("no valid pixels inside ROI " + name);

  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  double sum = 0.0;
  for (double x : values) sum += x;
  const double mean = sum / n;
  double var = 0.0;
  for (double x : values) var += (x - mean) * (x - mean);

  stats.area_pct = 100.0 * static_cast<double>(inside) / overlay.pixel_count();
  stats.mean = mean;
  stats.median = n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  stats.std_dev = std::sqrt(var / n);
  stats.min = values.front();
  stats.max = values.back();
  stats.pixel_count = static_cast<int>(n);
  return stats;
}

std::vector<std::vector<Point2>> marching_squares(const ScalarImage& img, double level) {
  using Segment = std::pair<Point2, Point2>;
  std::vector<Segment> segments;

  for (int y = 0; y + 1 < img.height; ++y) {
    for (int x = 0; x + 1 < img.width; ++x) {
      const double tl = img.at(x, y), tr = img.at(x + 1, y);
      const double br = img.at(x + 1, y + 1), bl = img.at(x, y + 1);
      int mask = 0;
      if (tl > level) mask |= 1;
      if (tr > level) mask |= 2;
      if (br > level) mask |= 4;
      if (bl > level) mask |= 8;
      if (mask == 0 || mask == 15) continue;

      const Point2 top = edge_point(x, y, tl, x + 1, y, tr, level);
      const Point2 right = edge_point(x + 1, y, tr, x + 1, y + 1, br, level);
      const Point2 bottom = edge_point(x, y + 1, bl, x + 1, y + 1, br, level);
      const Point2 left = edge_point(x, y, tl, x, y + 1, bl, level);

      auto emit = [&segments](const Point2& a, const Point2& b) { segments.emplace_back(a, b); };
      switch (mask) {
        case 1: case 14: emit(left, top); break;
        case 2: case 13: emit(top, right); break;
        case 3: case 12: emit(left, right); break;
        case 4: case 11: emit(right, bottom); break;
        case 6: case 9: emit(top, bottom); break;
        case 7: case 8: emit(left, bottom); break;
        case 5: case 10: {
          // Saddle: the cell-centre average picks which corners connect.
          const bool centre_high = 0.25 * (tl + tr + br + bl) > level;
          if ((mask == 5) == centre_high) {
            emit(left, top);
            emit(right, bottom);
          } else {
            emit(top, right);
            emit(left, bottom);
          }
          break;
        }
        default: break;
      }
    }
  }

  // Chain segments that share endpoints into polylines. Endpoints are keyed
  // on a fine quantisation grid so interpolated coordinates match exactly.
  auto key = [](const Point2& p) {
    return std::make_pair(std::llround(p.x() * 4096.0), std::llround(p.y() * 4096.0));
  };
  std::map<std::pair<long long, long long>, std::vector<size_t>> ends;
  for (size_t i = 0; i < segments.size(); ++i) {
    ends[key(segments[i].first)].push_back(i);
    ends[key(segments[i].second)].push_back(i);
  }

  std::vector<bool> used(segments.size(), false);
  std::vector<std::vector<Point2>> polylines;
  for (size_t start = 0; start < segments.size(); ++start) {
    if (used[start]) continue;
    used[start] = true;
    std::vector<Point2> line{segments[start].first, segments[start].second};
    // Grow forward from the tail, then backward from the head.
    for (int dir = 0; dir < 2; ++dir) {
      while (true) {
        const Point2 tip = dir == 0 ? line.back() : line.front();
        size_t next = segments.size();
        for (size_t cand : ends[key(tip)]) {
          if (!used[cand]) {
            next = cand;
            break;
          }
        }
        if (next == segments.size()) break;
        used[next] = true;
        const bool from_first = key(segments[next].first) == key(tip);
        const Point2 other = from_first ? segments[next].second : segments[next].first;
        if (dir == 0)
          line.push_back(other);
        else
          line.insert(line.begin(), other);
      }
    }
    polylines.push_back(std::move(line));
  }
  return polylines;
}

const std::array<Rgb8, 256>& thermal_palette() {
  static const std::array<Rgb8, 256> lut = [] {
    std::array<Rgb8, 256> t{};
    for (int i = 0; i < 256; ++i) {
      const double x = i / 255.0;
      auto ramp = [](double v) {
        return static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)));
      };
      t[i].r = ramp(1.5 - std::abs(4.0 * x - 3.0));
      t[i].g = ramp(1.5 - std::abs(4.0 * x - 2.0));
      t[i].b = ramp(1.5 - std::abs(4.0 * x - 1.0));
    }
    return t;
  }();
  return lut;
}

CameraModel distortion_free(const CameraModel& cam) {
  CameraModel out = cam;
  out.k1 = out.k2 = out.k3 = out.p1 = out.p2 = 0.0;
  return out;
}

ScalarImage undistort_image(const ScalarImage& img, const CameraModel& cam) {
  ScalarImage out(img.width, img.height);
  for (int v = 0; v < img.height; ++v) {
    const double yn = (v - cam.cy) / cam.fy;
    for (int u = 0; u < img.width; ++u) {
      const double xn = (u - cam.cx) / cam.fx;
      // The undistorted pixel's normalised ray, pushed through the forward
      // distortion, lands on its source in the recorded image.
      const Point2 nd = distort_normalised(cam, Point2(xn, yn));
      const double su = cam.fx * nd.x() + cam.cx;
      const double sv = cam.fy * nd.y() + cam.cy;
      out.at(u, v) = sample_valid(img, su, sv) ? bilinear_sample(img, su, sv) : 0.0;
    }
  }
  return out;
}

}  // namespace tcal
