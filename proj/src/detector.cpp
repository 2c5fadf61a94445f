#include "tcal/detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "tcal/image_ops.hpp"

namespace tcal {

namespace {

// ---------------------------------------------------------------- threshold

// Otsu's threshold index on a 256-bin histogram of values in [0, 1].
// Ties resolve to the smallest index.
int otsu_threshold(const ScalarImage& img) {
  constexpr int kBins = 256;
  std::array<double, kBins> hist{};
  for (double v : img.data) {
    int b = static_cast<int>(v * kBins);
    b = b < 0 ? 0 : (b >= kBins ? kBins - 1 : b);
    hist[b] += 1.0;
  }
  const double total = static_cast<double>(img.pixel_count());
  double sum_all = 0.0;
  for (int b = 0; b < kBins; ++b) sum_all += b * hist[b];

  int best_t = 0;
  double best_var = -1.0;
  double w0 = 0.0, sum0 = 0.0;
  for (int t = 0; t < kBins - 1; ++t) {
    w0 += hist[t];
    sum0 += t * hist[t];
    const double w1 = total - w0;
    if (w0 <= 0.0 || w1 <= 0.0) continue;
    const double mu0 = sum0 / w0;
    const double mu1 = (sum_all - sum0) / w1;
    const double var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    if (var > best_var + 1e-12) {
      best_var = var;
      best_t = t;
    }
  }
  return best_t;
}

// --------------------------------------------------------------- morphology

using Mask = std::vector<uint8_t>;

Mask morph(const Mask& in, int w, int h, int radius, bool dilate) {
  Mask out(in.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      uint8_t acc = dilate ? 0 : 1;
      for (int dy = -radius; dy <= radius && (dilate ? !acc : acc); ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= h) {
          if (!dilate) acc = 0;  // outside counts as background
          continue;
        }
        for (int dx = -radius; dx <= radius; ++dx) {
          const int xx = x + dx;
          const uint8_t v = (xx < 0 || xx >= w) ? 0 : in[static_cast<size_t>(yy) * w + xx];
          if (dilate && v) {
            acc = 1;
            break;
          }
          if (!dilate && !v) {
            acc = 0;
            break;
          }
        }
      }
      out[static_cast<size_t>(y) * w + x] = acc;
    }
  }
  return out;
}

Mask morph_close(Mask m, int w, int h, int iterations) {
  for (int i = 0; i < iterations; ++i) m = morph(m, w, h, 2, true);
  for (int i = 0; i < iterations; ++i) m = morph(m, w, h, 2, false);
  return m;
}

Mask morph_open(Mask m, int w, int h, int iterations) {
  for (int i = 0; i < iterations; ++i) m = morph(m, w, h, 2, false);
  for (int i = 0; i < iterations; ++i) m = morph(m, w, h, 2, true);
  return m;
}

// Largest 8-connected component, as pixel centres. Ties go to the component
// discovered first in scan order.
std::vector<Point2> largest_component(const Mask& mask, int w, int h) {
  std::vector<int> label(mask.size(), -1);
  std::vector<Point2> best;
  int next_label = 0;
  std::vector<int> stack;
  for (int y0 = 0; y0 < h; ++y0) {
    for (int x0 = 0; x0 < w; ++x0) {
      const size_t i0 = static_cast<size_t>(y0) * w + x0;
      if (!mask[i0] || label[i0] >= 0) continue;
      std::vector<Point2> comp;
      stack.clear();
      stack.push_back(static_cast<int>(i0));
      label[i0] = next_label;
      while (!stack.empty()) {
        const int i = stack.back();
        stack.pop_back();
        const int x = i % w, y = i / w;
        comp.push_back({static_cast<double>(x), static_cast<double>(y)});
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (!dx && !dy) continue;
            const int xx = x + dx, yy = y + dy;
            if (xx < 0 || xx >= w || yy < 0 || yy >= h) continue;
            const size_t j = static_cast<size_t>(yy) * w + xx;
            if (mask[j] && label[j] < 0) {
              label[j] = next_label;
              stack.push_back(static_cast<int>(j));
            }
          }
        }
      }
      if (comp.size() > best.size()) best = std::move(comp);
      ++next_label;
    }
  }
  return best;
}

// -------------------------------------------------------------- convex hull

double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

// Andrew's monotone chain; returns the hull in counter-clockwise order
// (image coordinates, y down => visually clockwise).
std::vector<Point2> convex_hull(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Point2& a, const Point2& b) { return a == b; }),
            pts.end());
  const size_t n = pts.size();
  if (n < 3) return pts;
  std::vector<Point2> hull(2 * n);
  size_t k = 0;
  for (size_t i = 0; i < n; ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  const size_t lower = k + 1;
  for (size_t i = n - 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

// ---------------------------------------------------- polygon simplification

double point_segment_distance(const Point2& p, const Point2& a, const Point2& b) {
  const Point2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 < 1e-24) return (p - a).norm();
  double t = (p - a).dot(ab) / len2;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

void dp_mark(const std::vector<Point2>& pts, size_t i0, size_t i1, double tol,
             std::vector<uint8_t>& keep) {
  if (i1 <= i0 + 1) return;
  double dmax = -1.0;
  size_t imax = i0;
  for (size_t i = i0 + 1; i < i1; ++i) {
    const double d = point_segment_distance(pts[i], pts[i0], pts[i1]);
    if (d > dmax) {
      dmax = d;
      imax = i;
    }
  }
  if (dmax > tol) {
    keep[imax] = 1;
    dp_mark(pts, i0, imax, tol, keep);
    dp_mark(pts, imax, i1, tol, keep);
  }
}

// Douglas-Peucker on a closed polygon: anchor at the two mutually most
// distant vertices, simplify both chains.
std::vector<Point2> simplify_closed(const std::vector<Point2>& poly, double tol) {
  const size_t n = poly.size();
  if (n <= 4) return poly;
  size_t a = 0, b = 0;
  double dmax = -1.0;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      const double d = (poly[i] - poly[j]).squaredNorm();
      if (d > dmax) {
        dmax = d;
        a = i;
        b = j;
      }
    }
  }
  // Rotate so the first anchor is index 0; the second lands at position m.
  std::vector<Point2> rot(n + 1);
  for (size_t i = 0; i < n; ++i) rot[i] = poly[(a + i) % n];
  rot[n] = rot[0];
  const size_t m = (b + n - a) % n;

  std::vector<uint8_t> keep(n + 1, 0);
  keep[0] = keep[m] = 1;
  dp_mark(rot, 0, m, tol, keep);
  dp_mark(rot, m, n, tol, keep);

  std::vector<Point2> out;
  for (size_t i = 0; i < n; ++i)
    if (keep[i]) out.push_back(rot[i]);
  return out;
}

double polygon_perimeter(const std::vector<Point2>& poly) {
  double p = 0.0;
  for (size_t i = 0; i < poly.size(); ++i) p += (poly[(i + 1) % poly.size()] - poly[i]).norm();
  return p;
}

// Orders quad corners by angle about the centroid, starting from the corner
// with the smallest x + y (top-left in image coordinates). With y pointing
// down, ascending angle walks top-left, top-right, bottom-right, bottom-left.
std::array<Point2, 4> order_quad(std::vector<Point2> q) {
  Point2 c = Point2::Zero();
  for (const auto& p : q) c += p;
  c /= 4.0;
  std::sort(q.begin(), q.end(), [&c](const Point2& a, const Point2& b) {
    return std::atan2(a.y() - c.y(), a.x() - c.x()) < std::atan2(b.y() - c.y(), b.x() - c.x());
  });
  size_t start = 0;
  for (size_t i = 1; i < 4; ++i)
    if (q[i].x() + q[i].y() < q[start].x() + q[start].y()) start = i;
  std::array<Point2, 4> out;
  for (size_t i = 0; i < 4; ++i) out[i] = q[(start + i) % 4];
  return out;
}

QuadROI estimate_roi_impl(const ScalarImage& normalised, const BoardSpec& spec, bool bright,
                          const DetectorConfig& cfg, ScalarImage* mask_out) {
  spec.validate();
  const int w = normalised.width, h = normalised.height;
  const int t = otsu_threshold(normalised);

  Mask mask(normalised.pixel_count());
  constexpr int kBins = 256;
  for (size_t i = 0; i < mask.size(); ++i) {
    int b = static_cast<int>(normalised.data[i] * kBins);
    b = b < 0 ? 0 : (b >= kBins ? kBins - 1 : b);
    mask[i] = bright ? (b > t) : (b <= t);
  }
  mask = morph_open(morph_close(std::move(mask), w, h, 2), w, h, 1);
  if (mask_out) {
    *mask_out = ScalarImage(w, h);
    for (size_t i = 0; i < mask.size(); ++i) mask_out->data[i] = mask[i] ? 1.0 : 0.0;
  }

  const std::vector<Point2> comp = largest_component(mask, w, h);
  if (comp.empty()) throw NoComponent("mask has no foreground after morphology");

  const std::vector<Point2> hull = convex_hull(comp);
  if (hull.size() < 3) throw QuadNotFound("hull degenerate (" + std::to_string(hull.size()) + " vertices)");

  const double perimeter = polygon_perimeter(hull);
  std::vector<Point2> quad;
  for (double f = cfg.dp_tol_start; f <= cfg.dp_tol_max + 1e-12; f += cfg.dp_tol_step) {
    const std::vector<Point2> simplified = simplify_closed(hull, f * perimeter);
    if (simplified.size() == 4) {
      quad = simplified;
      break;
    }
    if (simplified.size() < 4) break;  // further sweeping only removes more
  }
  if (quad.size() != 4) throw QuadNotFound("simplification never reached a 4-gon");

  QuadROI roi;
  roi.corners = order_quad(std::move(quad));
  const auto& q = roi.corners;
  const double w_bar = 0.5 * ((q[1] - q[0]).norm() + (q[2] - q[3]).norm());
  const double h_bar = 0.5 * ((q[3] - q[0]).norm() + (q[2] - q[1]).norm());
  roi.pitch_x = w_bar / spec.squares_x;
  roi.pitch_y = h_bar / spec.squares_y;
  if (!(roi.pitch_x > 0.0) || !(roi.pitch_y > 0.0)) throw QuadNotFound("collapsed quad");
  return roi;
}

// Corner-anchored bicubic upscale (src = dst / factor), so rectified pixel p
// corresponds to pre-upsample coordinate p / kappa exactly. The generic
// resize_bicubic aligns pixel centres instead, which would offset the lattice.
ScalarImage upscale_anchored(const ScalarImage& img, double factor) {
  const int ow = std::max(1, static_cast<int>(std::floor(img.width * factor + 0.5)));
  const int oh = std::max(1, static_cast<int>(std::floor(img.height * factor + 0.5)));
  auto cubic = [](double t) {
    constexpr double a = -0.5;
    t = std::abs(t);
    if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
    if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
    return 0.0;
  };
  ScalarImage out(ow, oh);
  for (int oy = 0; oy < oh; ++oy) {
    const double sy = oy / factor;
    const int y0 = static_cast<int>(std::floor(sy));
    const double fy = sy - y0;
    double wy[4];
    for (int j = 0; j < 4; ++j) wy[j] = cubic(fy - (j - 1));
    for (int ox = 0; ox < ow; ++ox) {
      const double sx = ox / factor;
      const int x0 = static_cast<int>(std::floor(sx));
      const double fx = sx - x0;
      double wx[4];
      for (int i = 0; i < 4; ++i) wx[i] = cubic(fx - (i - 1));
      double acc = 0.0;
      for (int j = 0; j < 4; ++j) {
        double row = 0.0;
        for (int i = 0; i < 4; ++i) row += wx[i] * img.at_clamped(x0 + i - 1, y0 + j - 1);
        acc += wy[j] * row;
      }
      out.at(ox, oy) = acc;
    }
  }
  return out;
}

}  // namespace

QuadROI estimate_roi(const ScalarImage& normalised, const BoardSpec& spec, bool bright,
                     const DetectorConfig& cfg) {
  return estimate_roi_impl(normalised, spec, bright, cfg, nullptr);
}

Rectified rectify(const ScalarImage& normalised, const QuadROI& roi, const DetectorConfig& cfg) {
  if (cfg.kappa < 1.0) throw ValidationError("rectify: kappa must be >= 1");
  const auto& q = roi.corners;
  const double w_bar = 0.5 * ((q[1] - q[0]).norm() + (q[2] - q[3]).norm());
  const double h_bar = 0.5 * ((q[3] - q[0]).norm() + (q[2] - q[1]).norm());
  const int wn = std::max(3, static_cast<int>(std::floor(w_bar + 0.5)));
  const int hn = std::max(3, static_cast<int>(std::floor(h_bar + 0.5)));

  const std::array<Point2, 4> dst = {Point2{0.0, 0.0}, Point2{w_bar, 0.0}, Point2{w_bar, h_bar},
                                     Point2{0.0, h_bar}};
  Rectified out;
  out.h = homography_from_quad(roi.corners, dst);
  ScalarImage flat = warp_perspective(normalised, out.h, wn, hn);
  flat = clahe(flat, cfg.clahe_clip, cfg.clahe_tiles, cfg.clahe_tiles);
  out.image = upscale_anchored(flat, cfg.kappa);
  out.pitch_x = cfg.kappa * roi.pitch_x;
  out.pitch_y = cfg.kappa * roi.pitch_y;
  return out;
}

ScalarImage saddle_response(const ScalarImage& rectified, double pitch_x, double pitch_y) {
  if (!(pitch_x > 0.0) || !(pitch_y > 0.0))
    throw ValidationError("saddle_response: pitches must be positive");
  const double sigma = (pitch_x + pitch_y) / 8.0;
  const ScalarImage smooth = gaussian_blur(rectified, sigma);
  const SecondDerivatives d = sobel_second_derivatives(smooth);
  ScalarImage s(rectified.width, rectified.height);
  double peak = 0.0;
  for (size_t i = 0; i < s.pixel_count(); ++i) {
    const double v = d.ixy.data[i] * d.ixy.data[i] - d.ixx.data[i] * d.iyy.data[i];
    s.data[i] = v > 0.0 ? v : 0.0;
    peak = std::max(peak, s.data[i]);
  }
  if (peak >= 1e-12)
    for (double& v : s.data) v /= peak;
  else
    std::fill(s.data.begin(), s.data.end(), 0.0);
  return s;
}

CornerGrid mean_shift_corners(const ScalarImage& response, const BoardSpec& spec, double pitch_x,
                              double pitch_y, const DetectorConfig& cfg) {
  spec.validate();
  if (!(pitch_x > 0.0) || !(pitch_y > 0.0))
    throw ValidationError("mean_shift_corners: pitches must be positive");
  CornerGrid grid(spec.corner_rows(), spec.corner_cols());
  const double wx = pitch_x / 4.0;  // half extent of the px/2 x py/2 window
  const double wy = pitch_y / 4.0;

  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      const Point2 nominal{(c + 1) * pitch_x, (r + 1) * pitch_y};
      Point2 pos = nominal;
      for (int it = 0; it < cfg.ms_max_iters; ++it) {
        const int x0 = std::max(0, static_cast<int>(std::ceil(pos.x() - wx)));
        const int x1 = std::min(response.width - 1, static_cast<int>(std::floor(pos.x() + wx)));
        const int y0 = std::max(0, static_cast<int>(std::ceil(pos.y() - wy)));
        const int y1 = std::min(response.height - 1, static_cast<int>(std::floor(pos.y() + wy)));
        if (x0 > x1 || y0 > y1) break;
        double mass = 0.0, mx = 0.0, my = 0.0;
        for (int y = y0; y <= y1; ++y) {
          for (int x = x0; x <= x1; ++x) {
            const double v = response.at(x, y);
            mass += v;
            mx += v * x;
            my += v * y;
          }
        }
        if (mass < 1e-12) break;  // flat window, nothing to climb
        const Point2 next{mx / mass, my / mass};
        const double shift = (next - pos).norm();
        pos = next;
        if (shift < cfg.ms_tol) break;
      }
      const bool in_img = pos.x() >= 0 && pos.x() <= response.width - 1 && pos.y() >= 0 &&
                          pos.y() <= response.height - 1;
      if (!in_img) continue;
      if (bilinear_sample(response, pos.x(), pos.y()) <= cfg.response_threshold) continue;
      if (std::abs(pos.x() - nominal.x()) > pitch_x / 2.0 ||
          std::abs(pos.y() - nominal.y()) > pitch_y / 2.0)
        continue;
      grid.at(r, c) = pos;
    }
  }
  return grid;
}

GateReport quality_gate(const CornerGrid& grid, double pitch_x, double pitch_y,
                        const DetectorConfig& cfg) {
  GateReport rep;
  rep.n_detected = grid.present_count();

  // Missing node with missing right or down neighbour?
  for (int r = 0; r < grid.rows && !rep.adjacent_missing; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      if (grid.at(r, c)) continue;
      const bool right_missing = (c + 1 < grid.cols) && !grid.at(r, c + 1);
      const bool down_missing = (r + 1 < grid.rows) && !grid.at(r + 1, c);
      if (right_missing || down_missing) {
        rep.adjacent_missing = true;
        break;
      }
    }
  }

  // Triangle areas over L-triples: node, right neighbour, down neighbour.
  std::vector<double> areas;
  for (int r = 0; r + 1 < grid.rows; ++r) {
    for (int c = 0; c + 1 < grid.cols; ++c) {
      const auto& p = grid.at(r, c);
      const auto& px = grid.at(r, c + 1);
      const auto& py = grid.at(r + 1, c);
      if (!p || !px || !py) continue;
      const Point2 u = *px - *p;
      const Point2 v = *py - *p;
      const double g = u.squaredNorm() * v.squaredNorm() - std::pow(u.dot(v), 2);
      areas.push_back(0.5 * std::sqrt(std::max(g, 0.0)));
    }
  }

  if (static_cast<int>(areas.size()) < cfg.min_triples) {
    rep.cv_area = std::numeric_limits<double>::infinity();
    rep.area_ratio = 0.0;
    rep.accepted = false;
    return rep;
  }

  double mean = 0.0;
  for (double a : areas) mean += a;
  mean /= static_cast<double>(areas.size());
  double var = 0.0;
  for (double a : areas) var += (a - mean) * (a - mean);
  var /= static_cast<double>(areas.size());  // population variance

  if (mean < 1e-12) {
    rep.cv_area = std::numeric_limits<double>::infinity();
    rep.area_ratio = 0.0;
    rep.accepted = false;
    return rep;
  }
  rep.cv_area = std::sqrt(var) / mean;
  rep.area_ratio = mean / (0.5 * pitch_x * pitch_y);
  rep.accepted = rep.cv_area < cfg.cv_max && rep.area_ratio > cfg.ratio_min &&
                 rep.area_ratio < cfg.ratio_max && !rep.adjacent_missing;
  return rep;
}

CornerGrid project_to_original(const CornerGrid& grid, const Homography& h, double kappa,
                               int native_w, int native_h) {
  if (!(kappa >= 1.0)) throw ValidationError("project_to_original: kappa must be >= 1");
  const Homography inv = h.inverse();
  CornerGrid out(grid.rows, grid.cols);
  out.frame_id = grid.frame_id;
  for (size_t i = 0; i < grid.nodes.size(); ++i) {
    if (!grid.nodes[i]) continue;
    const Point2 p = inv.apply(*grid.nodes[i] / kappa);
    // Keep nodes within the native bounds, with 1 px of slack.
    if (p.x() < -1.0 || p.x() > native_w || p.y() < -1.0 || p.y() > native_h) continue;
    out.nodes[i] = p;
  }
  return out;
}

DetectionResult detect_corners_debug(const ScalarImage& raw, const BoardSpec& spec,
                                     const DetectorConfig& cfg, DetectionDebug* debug) {
  spec.validate();
  ScalarImage norm;
  try {
    norm = percentile_normalize(raw, cfg.lo_pct, cfg.hi_pct);
  } catch (const NumericalError& e) {
    throw DetectionFailed("normalise", e.what());
  }

  bool have_result = false;
  DetectionResult first_completed;
  DetectionDebug first_debug;
  std::string err_stage, err_msg;

  for (const bool bright : {true, false}) {
    std::string stage = "estimate_roi";
    try {
      DetectionDebug dbg;
      dbg.normalised = norm;
      const QuadROI roi = estimate_roi_impl(norm, spec, bright, cfg, debug ? &dbg.mask : nullptr);
      stage = "rectify";
      Rectified rect = rectify(norm, roi, cfg);
      stage = "saddle_response";
      ScalarImage resp = saddle_response(rect.image, rect.pitch_x, rect.pitch_y);
      stage = "mean_shift";
      CornerGrid rect_grid = mean_shift_corners(resp, spec, rect.pitch_x, rect.pitch_y, cfg);
      stage = "quality_gate";
      GateReport rep = quality_gate(rect_grid, rect.pitch_x, rect.pitch_y, cfg);
      rep.polarity = bright ? "bright" : "dark";
      stage = "project_to_original";
      CornerGrid grid = project_to_original(rect_grid, rect.h, cfg.kappa, raw.width, raw.height);
      rep.n_detected = grid.present_count();

      DetectionResult res{std::move(grid), rep};
      if (debug) {
        dbg.roi = roi;
        dbg.rect = std::move(rect);
        dbg.response = std::move(resp);
        if (rep.accepted) {
          *debug = std::move(dbg);
        } else if (!have_result) {
          first_debug = std::move(dbg);
        }
      }
      if (rep.accepted) return res;
      if (!have_result) {
        have_result = true;
        first_completed = std::move(res);
      }
    } catch (const NumericalError& e) {
      if (err_stage.empty()) {
        err_stage = stage;
        err_msg = e.what();
      }
    }
  }

  if (have_result) {
    if (debug) *debug = std::move(first_debug);
    return first_completed;
  }
  throw DetectionFailed(err_stage.empty() ? "estimate_roi" : err_stage,
                        err_msg.empty() ? "no polarity produced a board quad" : err_msg);
}

DetectionResult detect_corners(const ScalarImage& raw, const BoardSpec& spec,
                               const DetectorConfig& cfg) {
  return detect_corners_debug(raw, spec, cfg, nullptr);
}

}  // namespace tcal
