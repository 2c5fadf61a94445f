// tircal: thermal-RGB stereo calibration toolkit.
//
// Subcommands cover the full pipeline: synthetic session generation, thermal
// corner detection, cross-modality pairing, per-camera intrinsics, stereo
// bundle adjustment, thermal-onto-RGB fusion, and a Markdown report. All
// machine-readable artefacts are JSON with an embedded provenance manifest.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tcal/config.hpp"
#include "tcal/detector.hpp"
#include "tcal/errors.hpp"
#include "tcal/fusion.hpp"
#include "tcal/image.hpp"
#include "tcal/intrinsics.hpp"
#include "tcal/json_io.hpp"
#include "tcal/png_io.hpp"
#include "tcal/stereo.hpp"
#include "tcal/synth.hpp"
#include "tcal/targets.hpp"

namespace fs = std::filesystem;
using tcal::Json;

namespace {

// Frames are stored as 16-bit PGM; intensities are authored in 0-255 a.u.
constexpr double kPgmScale = 257.0;  // maps 255 a.u. to the full 16-bit range

tcal::BoardSpec parse_board(const std::string& text) {
  tcal::BoardSpec board;
  double size = 0.0;
  int sx = 0, sy = 0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%dx%dx%lf%c", &sx, &sy, &size, &tail) != 3)
    throw tcal::ValidationError("bad board spec '" + text + "', expected SXxSYxSIZE e.g. 8x4x0.15");
  board.squares_x = sx;
  board.squares_y = sy;
  board.square_size = size;
  board.validate();
  return board;
}

std::pair<int, int> parse_size(const std::string& text) {
  int w = 0, h = 0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%dx%d%c", &w, &h, &tail) != 2 || w <= 0 || h <= 0)
    throw tcal::ValidationError("bad size '" + text + "', expected WxH e.g. 80x62");
  return {w, h};
}

tcal::ToolConfig load_config_opt(const std::string& path) {
  if (path.empty()) return {};
  return tcal::load_tool_config(path);
}

std::vector<std::string> sorted_frames(const std::string& dir) {
  std::vector<std::string> paths;
  if (!fs::is_directory(dir)) throw tcal::ValidationError("not a directory: " + dir);
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".pgm") paths.push_back(entry.path().string());
  }
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) throw tcal::ValidationError("no .pgm frames in " + dir);
  return paths;
}

void save_frame_png(const tcal::ScalarImage& img, const std::string& path, double lo, double hi) {
  tcal::ScalarImage scaled(img.width, img.height);
  const double span = std::max(hi - lo, 1e-12);
  for (size_t i = 0; i < img.data.size(); ++i)
    scaled.data[i] = 255.0 * (img.data[i] - lo) / span;
  tcal::save_png_gray(scaled, path);
}

// ---------------------------------------------------------------------------
// synth

int cmd_synth(const std::string& preset, std::uint64_t seed, const std::string& out_dir) {
  const tcal::SceneConfig cfg = tcal::make_session(preset, seed);
  fs::create_directories(out_dir);

  std::vector<tcal::RGBCornerSet> rgb_sets;
  for (size_t i = 0; i < cfg.poses.size(); ++i) {
    const int view = static_cast<int>(i);
    tcal::ScalarImage frame = tcal::render_tir_frame(cfg, view);
    for (double& v : frame.data) v *= kPgmScale;
    tcal::save_pgm(frame, out_dir + "/" + tcal::frame_name(view) + ".pgm", 65535);
    rgb_sets.push_back(tcal::project_corners_rgb(cfg, view));
  }

  const Json params{{"preset", preset}, {"seed", seed}, {"out_dir", out_dir}};
  Json truth = tcal::truth_to_json(cfg);
  truth["manifest"] = tcal::make_manifest("synth", {}, params);
  tcal::write_json(truth, out_dir + "/truth.json");

  Json rgb = tcal::rgb_sets_to_json(rgb_sets, cfg.board);
  rgb["manifest"] = tcal::make_manifest("synth", {}, params);
  tcal::write_json(rgb, out_dir + "/rgb.json");

  std::cout << "synth: " << cfg.poses.size() << " frames -> " << out_dir << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// detect-tir

int cmd_detect(const std::string& frames_dir, const std::string& board_text,
               const std::string& out_path, const std::string& config_path,
               const std::string& debug_dir) {
  const tcal::BoardSpec board = parse_board(board_text);
  const tcal::ToolConfig cfg = load_config_opt(config_path);
  if (!debug_dir.empty()) fs::create_directories(debug_dir);

  std::vector<tcal::FrameDetection> detections;
  std::vector<std::pair<std::string, std::string>> inputs;
  int accepted = 0;
  for (const std::string& path : sorted_frames(frames_dir)) {
    const std::string frame_id = fs::path(path).stem().string();
    inputs.emplace_back(frame_id, path);
    const tcal::ScalarImage raw = tcal::load_pgm(path);

    tcal::FrameDetection det;
    det.grid = tcal::CornerGrid(board.corner_rows(), board.corner_cols());
    det.grid.frame_id = frame_id;
    try {
      tcal::DetectionDebug dbg;
      const tcal::DetectionResult result = tcal::detect_corners_debug(raw, board, cfg.detector, &dbg);
      det.grid = result.grid;
      det.grid.frame_id = frame_id;
      det.gate = result.report;
      det.pitch_x = dbg.rect.pitch_x;
      det.pitch_y = dbg.rect.pitch_y;
      if (!debug_dir.empty()) {
        const std::string stem = debug_dir + "/" + frame_id;
        save_frame_png(dbg.normalised, stem + "_norm.png", 0.0, 1.0);
        save_frame_png(dbg.mask, stem + "_mask.png", 0.0, 1.0);
        save_frame_png(dbg.rect.image, stem + "_rect.png", 0.0, 1.0);
        save_frame_png(dbg.response, stem + "_response.png", 0.0, 1.0);
      }
    } catch (const tcal::DetectionFailed& e) {
      det.failure_stage = e.stage;
      std::cerr << "detect-tir: " << frame_id << ": " << e.what() << "\n";
    }
    accepted += det.gate.accepted ? 1 : 0;
    detections.push_back(std::move(det));
  }

  Json doc = tcal::detections_to_json(detections, board);
  doc["manifest"] = tcal::make_manifest(
      "detect-tir", inputs, Json{{"board", board_text}, {"config", config_path}});
  tcal::write_json(doc, out_path);
  std::cout << "detect-tir: " << accepted << "/" << detections.size() << " frames accepted -> "
            << out_path << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// pair

int cmd_pair(const std::string& rgb_path, const std::string& det_path,
             const std::string& out_path, int min_pairs) {
  const Json rgb_doc = tcal::read_json(rgb_path);
  const Json det_doc = tcal::read_json(det_path);
  const std::vector<tcal::RGBCornerSet> rgb_sets = tcal::rgb_sets_from_json(rgb_doc);
  tcal::BoardSpec board;
  const std::vector<tcal::FrameDetection> detections =
      tcal::detections_from_json(det_doc, &board);

  std::vector<tcal::CornerGrid> grids;
  std::vector<bool> accepted;
  for (const auto& det : detections) {
    grids.push_back(det.grid);
    accepted.push_back(det.gate.accepted);
  }
  const std::vector<tcal::MatchedView> views =
      tcal::pair_frames(rgb_sets, grids, accepted, board, min_pairs);

  Json doc = tcal::views_to_json(views, board);
  doc["manifest"] = tcal::make_manifest(
      "pair", {{"rgb", rgb_path}, {"detections", det_path}}, Json{{"min_pairs", min_pairs}});
  tcal::write_json(doc, out_path);

  size_t n_points = 0;
  for (const auto& v : views) n_points += v.size();
  std::cout << "pair: " << views.size() << " views, " << n_points << " matched points -> "
            << out_path << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// calibrate

int cmd_calibrate(const std::string& views_path, const std::string& modality,
                  const std::string& size_text, const std::string& out_path,
                  const std::string& config_path) {
  if (modality != "tir" && modality != "rgb")
    throw tcal::ValidationError("modality must be 'tir' or 'rgb'");
  const tcal::ToolConfig cfg = load_config_opt(config_path);
  const Json views_doc = tcal::read_json(views_path);
  const std::vector<tcal::MatchedView> views = tcal::views_from_json(views_doc);

  auto [w, h] = parse_size(size_text.empty() ? (modality == "tir" ? "80x62" : "2028x1520")
                                             : size_text);
  const tcal::CameraModel preset = modality == "tir" ? tcal::CameraModel::tir_preset(w, h)
                                                     : tcal::CameraModel::rgb_preset(w, h);

  std::vector<tcal::CalibrationView> calib_views;
  for (const auto& v : views) {
    tcal::CalibrationView cv;
    cv.frame_id = v.frame_id;
    cv.image_points = modality == "tir" ? v.tir_points : v.rgb_points;
    cv.object_points = v.object_points;
    calib_views.push_back(std::move(cv));
  }

  const tcal::IntrinsicsResult result = tcal::calibrate_intrinsics(calib_views, preset, cfg.lm);
  if (result.conditioning_warning)
    std::cerr << "calibrate: warning: weakly observable distortion (|k2| large)\n";

  Json doc = tcal::intrinsics_to_json(result, modality);
  Json poses = Json::array();
  for (size_t i = 0; i < result.poses.size(); ++i) {
    poses.push_back(Json{{"frame_id", views[i].frame_id},
                         {"rvec", Json::array({result.poses[i].rvec.x(), result.poses[i].rvec.y(),
                                               result.poses[i].rvec.z()})},
                         {"tvec", Json::array({result.poses[i].tvec.x(), result.poses[i].tvec.y(),
                                               result.poses[i].tvec.z()})}});
  }
  doc["poses"] = poses;
  doc["manifest"] = tcal::make_manifest(
      "calibrate", {{"views", views_path}},
      Json{{"modality", modality}, {"size", size_text}, {"config", config_path}});
  tcal::write_json(doc, out_path);
  std::cout << "calibrate " << modality << ": rms " << result.rms << " px over " << views.size()
            << " views -> " << out_path << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// stereo

int cmd_stereo(const std::string& views_path, const std::string& rgb_cam_path,
               const std::string& tir_cam_path, std::optional<double> fix_tz, bool compare,
               const std::string& out_path, const std::string& config_path) {
  const tcal::ToolConfig cfg = load_config_opt(config_path);
  const std::vector<tcal::MatchedView> views =
      tcal::views_from_json(tcal::read_json(views_path));
  const tcal::CameraModel k_rgb = tcal::intrinsics_from_json(tcal::read_json(rgb_cam_path)).first;
  const tcal::CameraModel k_tir = tcal::intrinsics_from_json(tcal::read_json(tir_cam_path)).first;

  tcal::StereoReport reference;
  const tcal::StereoReport report =
      tcal::solve_stereo(views, k_rgb, k_tir, fix_tz, cfg.lm, &reference);

  Json doc = tcal::stereo_to_json(report);
  if (compare && fix_tz) doc["unconstrained"] = tcal::stereo_to_json(reference);
  doc["manifest"] = tcal::make_manifest(
      "stereo", {{"views", views_path}, {"rgb_cam", rgb_cam_path}, {"tir_cam", tir_cam_path}},
      Json{{"fix_tz", fix_tz ? Json(*fix_tz) : Json(nullptr)},
           {"compare", compare},
           {"config", config_path}});
  tcal::write_json(doc, out_path);

  std::cout << "stereo: baseline " << report.extrinsics.baseline() * 1000.0 << " mm, rotation "
            << report.extrinsics.rotation_deg() << " deg, rms " << report.rms.rms_total
            << " px -> " << out_path << "\n";
  if (!report.converged) throw tcal::NoConvergence("stereo bundle adjustment did not converge");
  return 0;
}

// ---------------------------------------------------------------------------
// fuse

tcal::BoardPose pose_from_doc(const Json& doc, const std::string& frame) {
  auto read_pose = [](const Json& j) {
    tcal::BoardPose pose;
    pose.rvec = tcal::Vec3(j.at("rvec").at(0).get<double>(), j.at("rvec").at(1).get<double>(),
                           j.at("rvec").at(2).get<double>());
    pose.tvec = tcal::Vec3(j.at("tvec").at(0).get<double>(), j.at("tvec").at(1).get<double>(),
                           j.at("tvec").at(2).get<double>());
    return pose;
  };
  if (doc.contains("rvec")) return read_pose(doc);
  if (doc.contains("poses")) {
    const Json& poses = doc.at("poses");
    if (poses.empty()) throw tcal::ValidationError("pose file has an empty poses list");
    if (frame.empty()) return read_pose(poses.at(0));
    for (const auto& p : poses)
      if (p.at("frame_id").get<std::string>() == frame) return read_pose(p);
    throw tcal::ValidationError("frame '" + frame + "' not found in pose file");
  }
  throw tcal::ValidationError("pose file needs either rvec/tvec or a poses list");
}

int cmd_fuse(const std::string& rgb_img_path, const std::string& tir_img_path,
             const std::string& rgb_cam_path, const std::string& tir_cam_path,
             const std::string& stereo_path, const std::string& pose_path,
             const std::string& pose_frame, const std::string& depth_path,
             const std::string& rois_path, const std::string& levels_text,
             const std::string& out_dir) {
  if (pose_path.empty() == depth_path.empty())
    throw tcal::ValidationError("need exactly one of --plane-from-pose or --depth");
  fs::create_directories(out_dir);

  const tcal::CameraModel k_rgb = tcal::intrinsics_from_json(tcal::read_json(rgb_cam_path)).first;
  const tcal::CameraModel k_tir = tcal::intrinsics_from_json(tcal::read_json(tir_cam_path)).first;
  const tcal::StereoExtrinsics stereo = tcal::stereo_from_json(tcal::read_json(stereo_path));

  // TIR frame, rescaled to 0-255 a.u. and moved onto the distortion-free
  // geometry the remap works in.
  int tir_maxval = 255;
  tcal::ScalarImage tir = tcal::load_pgm(tir_img_path, &tir_maxval);
  for (double& v : tir.data) v *= 255.0 / tir_maxval;
  tir = tcal::undistort_image(tir, k_tir);

  const tcal::CameraModel k_rgb_new = tcal::distortion_free(k_rgb);
  const tcal::CameraModel k_tir_new = tcal::distortion_free(k_tir);

  tcal::ScalarImage depth;
  if (!pose_path.empty()) {
    const tcal::BoardPose pose = pose_from_doc(tcal::read_json(pose_path), pose_frame);
    const tcal::ScenePlane plane = tcal::plane_from_pose(pose);
    depth = tcal::plane_depth(k_rgb_new, plane, k_rgb.width, k_rgb.height);
  } else {
    depth = tcal::load_raw_f32(depth_path);
    if (depth.width != k_rgb.width || depth.height != k_rgb.height)
      throw tcal::ValidationError("depth map size does not match the RGB camera");
  }

  const tcal::RemapMaps maps = tcal::build_remap(k_rgb_new, k_tir_new, stereo, depth);
  tcal::ScalarImage valid;
  const tcal::ScalarImage overlay = tcal::remap_overlay(tir, maps, &valid);

  // Pseudocolour blend over the (optional) undistorted RGB image.
  tcal::ScalarImage rgb_gray;
  if (!rgb_img_path.empty()) {
    int rgb_maxval = 255;
    rgb_gray = tcal::load_pgm(rgb_img_path, &rgb_maxval);
    for (double& v : rgb_gray.data) v *= 255.0 / rgb_maxval;
    rgb_gray = tcal::undistort_image(rgb_gray, k_rgb);
    if (rgb_gray.width != overlay.width || rgb_gray.height != overlay.height)
      throw tcal::ValidationError("RGB image size does not match the RGB camera");
  }
  tcal::RgbImage blend(overlay.width, overlay.height);
  const auto& palette = tcal::thermal_palette();
  for (int y = 0; y < overlay.height; ++y) {
    for (int x = 0; x < overlay.width; ++x) {
      const double base = rgb_gray.pixel_count() ? rgb_gray.at(x, y) : 0.0;
      std::uint8_t* px = blend.px(x, y);
      if (valid.at(x, y) > 0.0) {
        const int idx = std::clamp(static_cast<int>(std::lround(overlay.at(x, y))), 0, 255);
        const tcal::Rgb8 c = palette[static_cast<size_t>(idx)];
        px[0] = static_cast<std::uint8_t>(std::lround(0.5 * base + 0.5 * c.r));
        px[1] = static_cast<std::uint8_t>(std::lround(0.5 * base + 0.5 * c.g));
        px[2] = static_cast<std::uint8_t>(std::lround(0.5 * base + 0.5 * c.b));
      } else {
        const auto g = static_cast<std::uint8_t>(std::clamp(base, 0.0, 255.0));
        px[0] = px[1] = px[2] = g;
      }
    }
  }
  tcal::save_png_rgb(blend, out_dir + "/overlay.png");

  // Isolines at the requested levels (defaults straddle the overlay range).
  std::vector<double> levels;
  if (!levels_text.empty()) {
    std::stringstream ss(levels_text);
    std::string tok;
    while (std::getline(ss, tok, ',')) levels.push_back(std::stod(tok));
  } else {
    double lo = 255.0, hi = 0.0;
    for (int y = 0; y < overlay.height; ++y)
      for (int x = 0; x < overlay.width; ++x)
        if (valid.at(x, y) > 0.0) {
          lo = std::min(lo, overlay.at(x, y));
          hi = std::max(hi, overlay.at(x, y));
        }
    for (double f : {0.25, 0.5, 0.75}) levels.push_back(lo + f * (hi - lo));
  }
  Json iso_levels = Json::array();
  for (double level : levels) {
    Json lines = Json::array();
    for (const auto& line : tcal::marching_squares(overlay, level)) {
      Json pts = Json::array();
      for (const auto& p : line) pts.push_back(Json::array({p.x(), p.y()}));
      lines.push_back(pts);
    }
    iso_levels.push_back(Json{{"level", level}, {"polylines", lines}});
  }

  // ROI statistics.
  Json roi_stats_json = Json::array();
  std::ofstream csv(out_dir + "/stats.csv");
  csv << "name,area_pct,mean,median,std,min,max,pixels\n";
  if (!rois_path.empty()) {
    const Json rois_doc = tcal::read_json(rois_path);
    for (const auto& rj : rois_doc.at("rois")) {
      std::vector<tcal::Point2> poly;
      for (const auto& p : rj.at("polygon"))
        poly.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
      const tcal::RoiStats stats =
          tcal::roi_stats(overlay, poly, &valid, rj.at("name").get<std::string>());
      roi_stats_json.push_back(Json{{"name", stats.name},
                                    {"area_pct", stats.area_pct},
                                    {"mean", stats.mean},
                                    {"median", stats.median},
                                    {"std", stats.std_dev},
                                    {"min", stats.min},
                                    {"max", stats.max},
                                    {"pixels", stats.pixel_count}});
      csv << stats.name << "," << stats.area_pct << "," << stats.mean << "," << stats.median
          << "," << stats.std_dev << "," << stats.min << "," << stats.max << ","
          << stats.pixel_count << "\n";
    }
  }

  std::vector<std::pair<std::string, std::string>> inputs{{"tir", tir_img_path},
                                                          {"rgb_cam", rgb_cam_path},
                                                          {"tir_cam", tir_cam_path},
                                                          {"stereo", stereo_path}};
  if (!rgb_img_path.empty()) inputs.emplace_back("rgb", rgb_img_path);
  if (!pose_path.empty()) inputs.emplace_back("pose", pose_path);
  if (!depth_path.empty()) inputs.emplace_back("depth", depth_path);
  if (!rois_path.empty()) inputs.emplace_back("rois", rois_path);
  const Json manifest = tcal::make_manifest(
      "fuse", inputs, Json{{"levels", levels_text}, {"pose_frame", pose_frame}});

  tcal::write_json(Json{{"levels", iso_levels}, {"manifest", manifest}},
                   out_dir + "/isolines.json");
  tcal::write_json(Json{{"rois", roi_stats_json}, {"manifest", manifest}},
                   out_dir + "/stats.json");
  std::cout << "fuse: overlay, isolines, and " << roi_stats_json.size() << " ROI stats -> "
            << out_dir << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// report

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
  return buf;
}

int cmd_report(const std::string& dir, const std::string& out_path) {
  std::ostringstream md;
  md << "# Calibration report\n";

  for (const std::string modality : {"rgb", "tir"}) {
    const std::string path = dir + "/camera_" + modality + ".json";
    if (!fs::exists(path)) continue;
    const Json j = tcal::read_json(path);
    md << "\n## Intrinsics (" << modality << ")\n\n";
    md << "| parameter | value |\n|---|---|\n";
    md << "| fx | " << fmt(j.at("fx").get<double>()) << " |\n";
    md << "| fy | " << fmt(j.at("fy").get<double>()) << " |\n";
    md << "| cx | " << fmt(j.at("cx").get<double>()) << " |\n";
    md << "| cy | " << fmt(j.at("cy").get<double>()) << " |\n";
    const Json& d = j.at("dist");
    md << "| k1, k2 | " << fmt(d.at(0).get<double>()) << ", " << fmt(d.at(1).get<double>())
       << " |\n";
    md << "| p1, p2, k3 | " << fmt(d.at(2).get<double>()) << ", " << fmt(d.at(3).get<double>())
       << ", " << fmt(d.at(4).get<double>()) << " |\n";
    md << "| rms [px] | " << fmt(j.at("rms").get<double>()) << " |\n";
  }

  const std::string stereo_path = dir + "/stereo.json";
  if (fs::exists(stereo_path)) {
    const Json j = tcal::read_json(stereo_path);
    const bool two_col = j.contains("unconstrained");
    md << "\n## Stereo extrinsics\n\n";
    auto row = [&](const std::string& label, auto get) {
      md << "| " << label << " | ";
      if (two_col) md << get(j.at("unconstrained")) << " | ";
      md << get(j) << " |\n";
    };
    md << "| parameter | " << (two_col ? "unconstrained | constrained |" : "value |") << "\n";
    md << (two_col ? "|---|---|---|\n" : "|---|---|\n");
    auto t_mm = [](const Json& d, int axis) {
      return fmt(d.at("t").at(axis).get<double>() * 1000.0, 2);
    };
    row("Tx [mm]", [&](const Json& d) { return t_mm(d, 0); });
    row("Ty [mm]", [&](const Json& d) { return t_mm(d, 1); });
    row("Tz [mm]", [&](const Json& d) { return t_mm(d, 2); });
    row("baseline [mm]",
        [&](const Json& d) { return fmt(d.at("baseline_m").get<double>() * 1000.0, 2); });
    row("rotation [deg]",
        [&](const Json& d) { return fmt(d.at("rotation_deg").get<double>(), 3); });
    row("RMS total [px]",
        [&](const Json& d) { return fmt(d.at("rms").at("total").get<double>(), 3); });
    row("RMS rgb [px]",
        [&](const Json& d) { return fmt(d.at("rms").at("rgb").get<double>(), 3); });
    row("RMS tir [px]",
        [&](const Json& d) { return fmt(d.at("rms").at("tir").get<double>(), 3); });
    row("iterations", [&](const Json& d) { return std::to_string(d.at("iterations").get<int>()); });
  }

  const std::string det_path = dir + "/detections.json";
  if (fs::exists(det_path)) {
    const Json j = tcal::read_json(det_path);
    int accepted = 0, total = 0;
    for (const auto& f : j.at("frames")) {
      ++total;
      accepted += f.at("accepted").get<bool>() ? 1 : 0;
    }
    md << "\n## Thermal detection\n\n"
       << accepted << " of " << total << " frames passed the quality gate.\n";
  }

  const std::string stats_path = dir + "/stats.json";
  if (fs::exists(stats_path)) {
    const Json j = tcal::read_json(stats_path);
    md << "\n## ROI statistics\n\n";
    md << "| ROI | area % | mean | median | std | min | max |\n|---|---|---|---|---|---|---|\n";
    for (const auto& r : j.at("rois")) {
      md << "| " << r.at("name").get<std::string>() << " | "
         << fmt(r.at("area_pct").get<double>(), 2) << " | " << fmt(r.at("mean").get<double>(), 2)
         << " | " << fmt(r.at("median").get<double>(), 2) << " | "
         << fmt(r.at("std").get<double>(), 2) << " | " << fmt(r.at("min").get<double>(), 2)
         << " | " << fmt(r.at("max").get<double>(), 2) << " |\n";
    }
  }

  std::ofstream out(out_path);
  if (!out) throw tcal::ValidationError("cannot write " + out_path);
  out << md.str();
  std::cout << "report -> " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RGB-thermal stereo calibration toolkit"};
  app.require_subcommand(1);

  // synth ------------------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "generate a synthetic calibration session");
  std::string synth_preset = "nominal";
  std::uint64_t synth_seed = 7;
  std::string synth_out = "data";
  synth->add_option("--preset", synth_preset, "nominal | degenerate-frontal | high-noise");
  synth->add_option("--seed", synth_seed, "session seed");
  synth->add_option("--out-dir", synth_out, "output directory");

  // detect-tir ---------------------------------------------------------------
  auto* detect = app.add_subcommand("detect-tir", "detect checkerboard corners in TIR frames");
  std::string det_frames = "data", det_board = "8x4x0.15", det_out = "data/detections.json";
  std::string det_config, det_debug;
  detect->add_option("--frames", det_frames, "directory of .pgm frames");
  detect->add_option("--board", det_board, "board spec SXxSYxSIZE");
  detect->add_option("--out", det_out, "output JSON");
  detect->add_option("--config", det_config, "tool config overrides");
  detect->add_option("--debug-dir", det_debug, "dump per-stage images here");

  // pair ---------------------------------------------------------------------
  auto* pair = app.add_subcommand("pair", "match RGB and TIR corner sets into views");
  std::string pair_rgb = "data/rgb.json", pair_det = "data/detections.json";
  std::string pair_out = "data/views.json";
  int pair_min = 8;
  pair->add_option("--rgb", pair_rgb, "RGB corner sets JSON");
  pair->add_option("--detections", pair_det, "TIR detections JSON");
  pair->add_option("--out", pair_out, "output views JSON");
  pair->add_option("--min-pairs", pair_min, "minimum matched nodes per view");

  // calibrate ------------------------------------------------------------
  auto* calib = app.add_subcommand("calibrate", "intrinsic calibration of one modality");
  std::string cal_views = "data/views.json", cal_modality = "tir", cal_size, cal_out, cal_config;
  calib->add_option("--views", cal_views, "matched views JSON");
  calib->add_option("--modality", cal_modality, "tir | rgb");
  calib->add_option("--size", cal_size, "sensor size WxH (default per modality)");
  calib->add_option("--out", cal_out, "output camera JSON");
  calib->add_option("--config", cal_config, "tool config overrides");

  // stereo -----------------------------------------------------------------
  auto* stereo = app.add_subcommand("stereo", "stereo extrinsics by bundle adjustment");
  std::string st_views = "data/views.json", st_rgb = "data/camera_rgb.json";
  std::string st_tir = "data/camera_tir.json", st_out = "data/stereo.json", st_config;
  double st_fix_tz = 0.0;
  bool st_compare = false;
  stereo->add_option("--views", st_views, "matched views JSON");
  stereo->add_option("--rgb", st_rgb, "RGB camera JSON");
  stereo->add_option("--tir", st_tir, "TIR camera JSON");
  auto* fix_opt = stereo->add_option("--fix-tz", st_fix_tz, "pin T_z to this value (metres)");
  stereo->add_flag("--compare", st_compare, "also emit the unconstrained solution");
  stereo->add_option("--out", st_out, "output stereo JSON");
  stereo->add_option("--config", st_config, "tool config overrides");

  // fuse ---------------------------------------------------------------------
  auto* fuse = app.add_subcommand("fuse", "project the TIR image onto the RGB frame");
  std::string fu_rgb, fu_tir, fu_rgb_cam = "data/camera_rgb.json";
  std::string fu_tir_cam = "data/camera_tir.json", fu_stereo = "data/stereo.json";
  std::string fu_pose, fu_pose_frame, fu_depth, fu_rois, fu_levels, fu_out = "data/fuse";
  fuse->add_option("--rgb", fu_rgb, "RGB image (PGM) for the blend background");
  fuse->add_option("--tir", fu_tir, "TIR image (PGM)")->required();
  fuse->add_option("--rgb-cam", fu_rgb_cam, "RGB camera JSON");
  fuse->add_option("--tir-cam", fu_tir_cam, "TIR camera JSON");
  fuse->add_option("--stereo", fu_stereo, "stereo JSON");
  fuse->add_option("--plane-from-pose", fu_pose, "pose JSON defining the scene plane");
  fuse->add_option("--pose-frame", fu_pose_frame, "frame_id inside the pose file");
  fuse->add_option("--depth", fu_depth, "raw f32 depth map");
  fuse->add_option("--rois", fu_rois, "ROI polygons JSON");
  fuse->add_option("--isolines", fu_levels, "comma-separated iso levels");
  fuse->add_option("--out-dir", fu_out, "output directory");

  // report -------------------------------------------------------------------
  auto* report = app.add_subcommand("report", "render a Markdown report from artefacts");
  std::string rep_dir = "data", rep_out = "data/report.md";
  report->add_option("--dir", rep_dir, "artefact directory");
  report->add_option("--out", rep_out, "output Markdown file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) return cmd_synth(synth_preset, synth_seed, synth_out);
    if (detect->parsed()) return cmd_detect(det_frames, det_board, det_out, det_config, det_debug);
    if (pair->parsed()) return cmd_pair(pair_rgb, pair_det, pair_out, pair_min);
    if (calib->parsed()) {
      if (cal_out.empty()) cal_out = "data/camera_" + cal_modality + ".json";
      return cmd_calibrate(cal_views, cal_modality, cal_size, cal_out, cal_config);
    }
    if (stereo->parsed()) {
      const std::optional<double> fix_tz =
          fix_opt->count() ? std::optional<double>(st_fix_tz) : std::nullopt;
      return cmd_stereo(st_views, st_rgb, st_tir, fix_tz, st_compare, st_out, st_config);
    }
    if (fuse->parsed())
      return cmd_fuse(fu_rgb, fu_tir, fu_rgb_cam, fu_tir_cam, fu_stereo, fu_pose, fu_pose_frame,
                      fu_depth, fu_rois, fu_levels, fu_out);
    if (report->parsed()) return cmd_report(rep_dir, rep_out);
  } catch (const tcal::ValidationError& e) {
    std::cerr << "tircal: error: " << e.what() << "\n";
    return 2;
  } catch (const tcal::NumericalError& e) {
    std::cerr << "tircal: numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "tircal: error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
