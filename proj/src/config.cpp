#include "tcal/config.hpp"

#include <functional>
#include <map>
#include <string>

#include <json.hpp>

#include "tcal/errors.hpp"
#include "tcal/json_io.hpp"

namespace tcal {
namespace {

using Json = nlohmann::json;

// Applies one override section; every key must name a known field.
template <typename T>
void apply_section(const Json& section, const std::string& name,
                   const std::map<std::string, std::function<void(T&, const Json&)>>& setters,
                   T& target) {
  if (!section.is_object())
    throw ValidationError("config: section '" + name + "' must be an object");
  for (const auto& [key, value] : section.items()) {
    const auto it = setters.find(key);
    if (it == setters.end())
      throw ValidationError("config: unknown key '" + name + "." + key + "'");
    it->second(target, value);
  }
}

}  // namespace

ToolConfig load_tool_config(const std::string& path) {
  ToolConfig cfg;
  const Json doc = read_json(path);
  if (!doc.is_object()) throw ValidationError("config: top level must be an object");

  static const std::map<std::string, std::function<void(DetectorConfig&, const Json&)>>
      detector_setters = {
          {"lo_pct", [](DetectorConfig& d, const Json& v) { d.lo_pct = v.get<double>(); }},
          {"hi_pct", [](DetectorConfig& d, const Json& v) { d.hi_pct = v.get<double>(); }},
          {"kappa", [](DetectorConfig& d, const Json& v) { d.kappa = v.get<double>(); }},
          {"clahe_clip", [](DetectorConfig& d, const Json& v) { d.clahe_clip = v.get<double>(); }},
          {"clahe_tiles", [](DetectorConfig& d, const Json& v) { d.clahe_tiles = v.get<int>(); }},
          {"response_threshold",
           [](DetectorConfig& d, const Json& v) { d.response_threshold = v.get<double>(); }},
          {"ms_tol", [](DetectorConfig& d, const Json& v) { d.ms_tol = v.get<double>(); }},
          {"ms_max_iters",
           [](DetectorConfig& d, const Json& v) { d.ms_max_iters = v.get<int>(); }},
          {"cv_max", [](DetectorConfig& d, const Json& v) { d.cv_max = v.get<double>(); }},
          {"ratio_min", [](DetectorConfig& d, const Json& v) { d.ratio_min = v.get<double>(); }},
          {"ratio_max", [](DetectorConfig& d, const Json& v) { d.ratio_max = v.get<double>(); }},
          {"dp_tol_start",
           [](DetectorConfig& d, const Json& v) { d.dp_tol_start = v.get<double>(); }},
          {"dp_tol_step",
           [](DetectorConfig& d, const Json& v) { d.dp_tol_step = v.get<double>(); }},
          {"dp_tol_max", [](DetectorConfig& d, const Json& v) { d.dp_tol_max = v.get<double>(); }},
          {"min_triples", [](DetectorConfig& d, const Json& v) { d.min_triples = v.get<int>(); }},
      };

  static const std::map<std::string, std::function<void(LmConfig&, const Json&)>> lm_setters = {
      {"max_iters_intrinsics",
       [](LmConfig& l, const Json& v) { l.max_iters_intrinsics = v.get<int>(); }},
      {"rel_cost_tol_intrinsics",
       [](LmConfig& l, const Json& v) { l.rel_cost_tol_intrinsics = v.get<double>(); }},
      {"max_iters_stereo", [](LmConfig& l, const Json& v) { l.max_iters_stereo = v.get<int>(); }},
      {"rel_cost_tol_stereo",
       [](LmConfig& l, const Json& v) { l.rel_cost_tol_stereo = v.get<double>(); }},
      {"grad_tol_stereo",
       [](LmConfig& l, const Json& v) { l.grad_tol_stereo = v.get<double>(); }},
      {"lambda_init", [](LmConfig& l, const Json& v) { l.lambda_init = v.get<double>(); }},
      {"lambda_up", [](LmConfig& l, const Json& v) { l.lambda_up = v.get<double>(); }},
      {"lambda_down", [](LmConfig& l, const Json& v) { l.lambda_down = v.get<double>(); }},
  };

  for (const auto& [key, value] : doc.items()) {
    if (key == "detector")
      apply_section(value, "detector", detector_setters, cfg.detector);
    else if (key == "lm")
      apply_section(value, "lm", lm_setters, cfg.lm);
    else
      throw ValidationError("config: unknown section '" + key + "'");
  }
  return cfg;
}

}  // namespace tcal
