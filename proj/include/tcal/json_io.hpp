#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tcal/board.hpp"
#include "tcal/camera.hpp"
#include "tcal/detector.hpp"
#include "tcal/intrinsics.hpp"
#include "tcal/stereo.hpp"
#include "tcal/synth.hpp"
#include "tcal/targets.hpp"

namespace tcal {

using Json = nlohmann::json;

// 64-bit FNV-1a content hash, rendered as "fnv1a:<16 hex digits>".
std::uint64_t fnv1a(const void* data, std::size_t n);
std::string fnv1a_hex(const std::string& bytes);
std::string digest_file(const std::string& path);

// Provenance block embedded in every artefact: tool version, the command,
// content digests of the inputs, the effective parameters, and a timestamp.
// The timestamp is the one field excluded from artefact digests. Inputs that
// are JSON artefacts are digested canonically (see artifact_digest) so a
// timestamp upstream never changes the digests downstream; other inputs are
// hashed byte for byte.
Json make_manifest(const std::string& command,
                   const std::vector<std::pair<std::string, std::string>>& input_files,
                   const Json& parameters);

// Canonical digest of an artefact: the manifest timestamp is dropped, the
// document re-serialised (sorted keys, shortest round-trip numbers), hashed.
std::string artifact_digest(Json doc);

void write_json(const Json& doc, const std::string& path);
Json read_json(const std::string& path);

// Non-finite doubles serialise as null (cv_area of a rejected frame).
Json finite_or_null(double v);

// board -------------------------------------------------------------------
Json board_to_json(const BoardSpec& board);
BoardSpec board_from_json(const Json& j);

// synth artefacts -----------------------------------------------------------
Json truth_to_json(const SceneConfig& cfg);
Json rgb_sets_to_json(const std::vector<RGBCornerSet>& sets, const BoardSpec& board);
std::vector<RGBCornerSet> rgb_sets_from_json(const Json& j);

// detector artefacts --------------------------------------------------------
struct FrameDetection {
  CornerGrid grid;
  GateReport gate;
  double pitch_x = 0.0;
  double pitch_y = 0.0;
  std::string failure_stage;  // set when the pipeline threw before the gate
};
Json detections_to_json(const std::vector<FrameDetection>& frames, const BoardSpec& board);
std::vector<FrameDetection> detections_from_json(const Json& j, BoardSpec* board_out = nullptr);

// matched views -------------------------------------------------------------
Json views_to_json(const std::vector<MatchedView>& views, const BoardSpec& board);
std::vector<MatchedView> views_from_json(const Json& j, BoardSpec* board_out = nullptr);

// cameras ---------------------------------------------------------------
Json camera_to_json(const CameraModel& cam);
CameraModel camera_from_json(const Json& j);
Json intrinsics_to_json(const IntrinsicsResult& result, const std::string& modality);
// Reads the camera model plus reported rms out of a calibration artefact.
std::pair<CameraModel, double> intrinsics_from_json(const Json& j);

// stereo ----------------------------------------------------------------
Json stereo_to_json(const StereoReport& report);
StereoExtrinsics stereo_from_json(const Json& j);

}  // namespace tcal
