#pragma once

#include <string>

namespace tcal {

// Tunables for the thermal corner detector. Defaults are the reference
// operating point; the CLI can override any field from a JSON file.
struct DetectorConfig {
  double lo_pct = 0.01;          // normalisation percentiles
  double hi_pct = 0.99;
  double kappa = 4.0;            // rectified upsampling factor
  double clahe_clip = 2.0;
  int clahe_tiles = 4;
  double response_threshold = 0.1;  // min saddle response at a converged node
  double ms_tol = 0.01;             // mean-shift stop threshold, px
  int ms_max_iters = 50;
  double cv_max = 0.15;             // gate: max CV of L-triple areas
  double ratio_min = 0.4;           // gate: acceptable mean/expected area band
  double ratio_max = 2.5;
  double dp_tol_start = 0.01;       // quad simplification sweep, fraction of
  double dp_tol_step = 0.01;        // hull perimeter
  double dp_tol_max = 0.10;
  int min_triples = 3;
};

// Levenberg-Marquardt knobs shared by the calibration solvers.
struct LmConfig {
  int max_iters_intrinsics = 100;
  double rel_cost_tol_intrinsics = 1e-10;
  int max_iters_stereo = 200;
  double rel_cost_tol_stereo = 1e-12;
  double grad_tol_stereo = 1e-10;
  double lambda_init = 1e-3;
  double lambda_up = 10.0;
  double lambda_down = 0.1;
};

struct ToolConfig {
  DetectorConfig detector;
  LmConfig lm;
};

// Merges overrides from a JSON file ({"detector": {...}, "lm": {...}}) onto
// the defaults. Unknown keys are rejected to catch typos.
ToolConfig load_tool_config(const std::string& path);

}  // namespace tcal
