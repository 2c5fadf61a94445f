#include "tcal/json_io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <sstream>

#include "tcal/errors.hpp"

namespace tcal {
namespace {

constexpr const char* kToolVersion = "tircal 0.1.0";

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

Json point2_to_json(const Point2& p) { return Json::array({p.x(), p.y()}); }
Point2 point2_from_json(const Json& j) { return Point2(j.at(0).get<double>(), j.at(1).get<double>()); }
Json vec3_to_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }
Vec3 vec3_from_json(const Json& j) {
  return Vec3(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>());
}

}  // namespace

std::uint64_t fnv1a(const void* data, std::size_t n) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string fnv1a_hex(const std::string& bytes) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a:%016llx",
                static_cast<unsigned long long>(fnv1a(bytes.data(), bytes.size())));
  return buf;
}

std::string digest_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open for digest: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a_hex(ss.str());
}

namespace {

// Digest of one input file. JSON artefacts are hashed canonically so an
// upstream manifest timestamp cannot leak into downstream digests; anything
// else is hashed byte for byte.
std::string input_digest(const std::string& path) {
  if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0) {
    try {
      return artifact_digest(read_json(path));
    } catch (const std::exception&) {
      // malformed JSON: fall back to the byte hash
    }
  }
  return digest_file(path);
}

}  // namespace

Json make_manifest(const std::string& command,
                   const std::vector<std::pair<std::string, std::string>>& input_files,
                   const Json& parameters) {
  Json inputs = Json::object();
  for (const auto& [label, path] : input_files) inputs[label] = input_digest(path);
  return Json{{"tool_version", kToolVersion},
              {"command", command},
              {"inputs", inputs},
              {"parameters", parameters},
              {"timestamp", iso_timestamp()}};
}

std::string artifact_digest(Json doc) {
  if (doc.contains("manifest") && doc["manifest"].contains("timestamp"))
    doc["manifest"].erase("timestamp");
  return fnv1a_hex(doc.dump(2));
}

void write_json(const Json& doc, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  out << doc.dump(2) << "\n";
  if (!out) throw ValidationError("write failed for " + path);
}

Json read_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  Json doc;
  try {
    in >> doc;
  } catch (const Json::parse_error& e) {
    throw ValidationError("bad JSON in " + path + ": " + e.what());
  }
  return doc;
}

Json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

Json board_to_json(const BoardSpec& board) {
  return Json{{"squares_x", board.squares_x},
              {"squares_y", board.squares_y},
              {"square_size", board.square_size}};
}

BoardSpec board_from_json(const Json& j) {
  BoardSpec board;
  board.squares_x = j.at("squares_x").get<int>();
  board.squares_y = j.at("squares_y").get<int>();
  board.square_size = j.at("square_size").get<double>();
  board.validate();
  return board;
}

Json truth_to_json(const SceneConfig& cfg) {
  Json poses = Json::array();
  for (size_t i = 0; i < cfg.poses.size(); ++i) {
    poses.push_back(Json{{"frame_id", frame_name(static_cast<int>(i))},
                         {"rvec", vec3_to_json(cfg.poses[i].rvec)},
                         {"tvec", vec3_to_json(cfg.poses[i].tvec)}});
  }
  return Json{{"preset", cfg.preset_name},
              {"seed", cfg.seed},
              {"board", board_to_json(cfg.board)},
              {"camera_rgb", camera_to_json(cfg.k_rgb)},
              {"camera_tir", camera_to_json(cfg.k_tir)},
              {"stereo",
               Json{{"rvec", vec3_to_json(cfg.stereo.rvec)},
                    {"t", vec3_to_json(cfg.stereo.tvec)},
                    {"baseline_m", cfg.stereo.baseline()},
                    {"rotation_deg", cfg.stereo.rotation_deg()}}},
              {"noise",
               Json{{"tir_intensity", cfg.noise_sigma_tir},
                    {"rgb_px", cfg.noise_sigma_rgb_px},
                    {"tir_px", cfg.noise_sigma_tir_px},
                    {"blur_sigma_tir", cfg.blur_sigma_tir}}},
              {"contrast", Json::array({cfg.contrast_lo, cfg.contrast_hi})},
              {"poses", poses}};
}

Json rgb_sets_to_json(const std::vector<RGBCornerSet>& sets, const BoardSpec& board) {
  Json frames = Json::array();
  for (const auto& set : sets) {
    Json corners = Json::array();
    for (const auto& c : set.corners) {
      corners.push_back(Json{{"x_idx", c.x_idx},
                             {"y_idx", c.y_idx},
                             {"point", point2_to_json(c.point)}});
    }
    frames.push_back(Json{{"frame_id", set.frame_id}, {"corners", corners}});
  }
  return Json{{"board", board_to_json(board)}, {"frames", frames}};
}

std::vector<RGBCornerSet> rgb_sets_from_json(const Json& j) {
  std::vector<RGBCornerSet> sets;
  for (const auto& f : j.at("frames")) {
    RGBCornerSet set;
    set.frame_id = f.at("frame_id").get<std::string>();
    for (const auto& c : f.at("corners")) {
      RGBCorner corner;
      corner.x_idx = c.at("x_idx").get<int>();
      corner.y_idx = c.at("y_idx").get<int>();
      corner.point = point2_from_json(c.at("point"));
      set.corners.push_back(corner);
    }
    sets.push_back(std::move(set));
  }
  return sets;
}

Json detections_to_json(const std::vector<FrameDetection>& frames, const BoardSpec& board) {
  Json out_frames = Json::array();
  for (const auto& f : frames) {
    Json nodes = Json::array();
    for (int r = 0; r < f.grid.rows; ++r) {
      for (int c = 0; c < f.grid.cols; ++c) {
        if (!f.grid.at(r, c)) continue;
        nodes.push_back(Json{{"r", r}, {"c", c}, {"point", point2_to_json(*f.grid.at(r, c))}});
      }
    }
    out_frames.push_back(Json{{"frame_id", f.grid.frame_id},
                              {"accepted", f.gate.accepted},
                              {"polarity", f.gate.polarity},
                              {"cv_area", finite_or_null(f.gate.cv_area)},
                              {"area_ratio", finite_or_null(f.gate.area_ratio)},
                              {"adjacent_missing", f.gate.adjacent_missing},
                              {"n_detected", f.gate.n_detected},
                              {"pitch_x", f.pitch_x},
                              {"pitch_y", f.pitch_y},
                              {"failure_stage", f.failure_stage},
                              {"nodes", nodes}});
  }
  return Json{{"board", board_to_json(board)}, {"frames", out_frames}};
}

std::vector<FrameDetection> detections_from_json(const Json& j, BoardSpec* board_out) {
  const BoardSpec board = board_from_json(j.at("board"));
  if (board_out) *board_out = board;
  std::vector<FrameDetection> frames;
  for (const auto& f : j.at("frames")) {
    FrameDetection det;
    det.grid = CornerGrid(board.corner_rows(), board.corner_cols());
    det.grid.frame_id = f.at("frame_id").get<std::string>();
    for (const auto& n : f.at("nodes"))
      det.grid.at(n.at("r").get<int>(), n.at("c").get<int>()) = point2_from_json(n.at("point"));
    det.gate.accepted = f.at("accepted").get<bool>();
    det.gate.polarity = f.at("polarity").get<std::string>();
    det.gate.cv_area = f.at("cv_area").is_null() ? std::numeric_limits<double>::infinity()
                                                 : f.at("cv_area").get<double>();
    det.gate.area_ratio = f.at("area_ratio").is_null() ? 0.0 : f.at("area_ratio").get<double>();
    det.gate.adjacent_missing = f.at("adjacent_missing").get<bool>();
    det.gate.n_detected = f.at("n_detected").get<int>();
    det.pitch_x = f.at("pitch_x").get<double>();
    det.pitch_y = f.at("pitch_y").get<double>();
    det.failure_stage = f.at("failure_stage").get<std::string>();
    frames.push_back(std::move(det));
  }
  return frames;
}

Json views_to_json(const std::vector<MatchedView>& views, const BoardSpec& board) {
  Json out_views = Json::array();
  for (const auto& v : views) {
    Json nodes = Json::array();
    for (size_t i = 0; i < v.size(); ++i) {
      nodes.push_back(Json{{"r", v.node_r[i]},
                           {"c", v.node_c[i]},
                           {"rgb", point2_to_json(v.rgb_points[i])},
                           {"tir", point2_to_json(v.tir_points[i])},
                           {"object", Json::array({v.object_points[i].x(), v.object_points[i].y(),
                                                   v.object_points[i].z()})}});
    }
    out_views.push_back(Json{{"frame_id", v.frame_id}, {"nodes", nodes}});
  }
  return Json{{"board", board_to_json(board)}, {"views", out_views}};
}

std::vector<MatchedView> views_from_json(const Json& j, BoardSpec* board_out) {
  if (board_out) *board_out = board_from_json(j.at("board"));
  std::vector<MatchedView> views;
  for (const auto& vj : j.at("views")) {
    MatchedView v;
    v.frame_id = vj.at("frame_id").get<std::string>();
    for (const auto& n : vj.at("nodes")) {
      v.node_r.push_back(n.at("r").get<int>());
      v.node_c.push_back(n.at("c").get<int>());
      v.rgb_points.push_back(point2_from_json(n.at("rgb")));
      v.tir_points.push_back(point2_from_json(n.at("tir")));
      const Json& o = n.at("object");
      v.object_points.emplace_back(o.at(0).get<double>(), o.at(1).get<double>(),
                                   o.at(2).get<double>());
    }
    views.push_back(std::move(v));
  }
  return views;
}

Json camera_to_json(const CameraModel& cam) {
  Json fixed = Json::array();
  for (bool f : cam.fixed) fixed.push_back(f);
  return Json{{"fx", cam.fx},
              {"fy", cam.fy},
              {"cx", cam.cx},
              {"cy", cam.cy},
              {"dist", Json::array({cam.k1, cam.k2, cam.p1, cam.p2, cam.k3})},
              {"fixed", fixed},
              {"fy_equals_fx", cam.fy_equals_fx},
              {"image_size", Json::array({cam.width, cam.height})}};
}

CameraModel camera_from_json(const Json& j) {
  CameraModel cam;
  cam.fx = j.at("fx").get<double>();
  cam.fy = j.at("fy").get<double>();
  cam.cx = j.at("cx").get<double>();
  cam.cy = j.at("cy").get<double>();
  const Json& d = j.at("dist");
  cam.k1 = d.at(0).get<double>();
  cam.k2 = d.at(1).get<double>();
  cam.p1 = d.at(2).get<double>();
  cam.p2 = d.at(3).get<double>();
  cam.k3 = d.at(4).get<double>();
  if (j.contains("fixed")) {
    const Json& f = j.at("fixed");
    for (size_t i = 0; i < cam.fixed.size() && i < f.size(); ++i)
      cam.fixed[i] = f.at(i).get<bool>();
  }
  if (j.contains("fy_equals_fx")) cam.fy_equals_fx = j.at("fy_equals_fx").get<bool>();
  cam.width = j.at("image_size").at(0).get<int>();
  cam.height = j.at("image_size").at(1).get<int>();
  return cam;
}

Json intrinsics_to_json(const IntrinsicsResult& result, const std::string& modality) {
  Json doc = camera_to_json(result.camera);
  doc["modality"] = modality;
  doc["rms"] = result.rms;
  Json per_view = Json::array();
  for (double r : result.per_view_rms) per_view.push_back(r);
  doc["per_view_rms"] = per_view;
  doc["iterations"] = result.iterations;
  doc["converged"] = result.converged;
  doc["conditioning_warning"] = result.conditioning_warning;
  return doc;
}

std::pair<CameraModel, double> intrinsics_from_json(const Json& j) {
  return {camera_from_json(j), j.contains("rms") ? j.at("rms").get<double>() : 0.0};
}

Json stereo_to_json(const StereoReport& report) {
  Json per_view = Json::array();
  for (size_t i = 0; i < report.frame_ids.size(); ++i) {
    per_view.push_back(Json{{"frame_id", report.frame_ids[i]},
                            {"n_points", report.view_sizes[i]},
                            {"rms_rgb", report.rms.per_view_rgb[i]},
                            {"rms_tir", report.rms.per_view_tir[i]}});
  }
  return Json{{"rvec", vec3_to_json(report.extrinsics.rvec)},
              {"t", vec3_to_json(report.extrinsics.tvec)},
              {"tz_fixed", report.tz_fixed ? Json(*report.tz_fixed) : Json(nullptr)},
              {"baseline_m", report.extrinsics.baseline()},
              {"rotation_deg", report.extrinsics.rotation_deg()},
              {"rms", Json{{"total", report.rms.rms_total},
                           {"rgb", report.rms.rms_rgb},
                           {"tir", report.rms.rms_tir}}},
              {"cost", report.cost},
              {"iterations", report.iterations},
              {"converged", report.converged},
              {"per_view", per_view}};
}

StereoExtrinsics stereo_from_json(const Json& j) {
  StereoExtrinsics s;
  s.rvec = vec3_from_json(j.at("rvec"));
  s.tvec = vec3_from_json(j.at("t"));
  return s;
}

}  // namespace tcal
