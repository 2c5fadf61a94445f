#pragma once

#include <stdexcept>
#include <string>

namespace tcal {

// Two error families, mirrored by the CLI exit codes: validation problems
// (bad arguments, malformed files, violated preconditions) exit with 2,
// numerical failures (degenerate geometry, non-convergence) exit with 3.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

#define TCAL_DEFINE_ERROR(Name, Base)                                                  \
  struct Name : Base {                                                                 \
    explicit Name(const std::string& msg) : Base(std::string(#Name) + ": " + msg) {}   \
  }

TCAL_DEFINE_ERROR(DegenerateRange, NumericalError);
TCAL_DEFINE_ERROR(ImageTooSmall, ValidationError);
TCAL_DEFINE_ERROR(DegenerateQuad, NumericalError);
TCAL_DEFINE_ERROR(DegenerateHomography, NumericalError);
TCAL_DEFINE_ERROR(NoComponent, NumericalError);
TCAL_DEFINE_ERROR(QuadNotFound, NumericalError);
TCAL_DEFINE_ERROR(BehindCamera, NumericalError);
TCAL_DEFINE_ERROR(NotARotation, ValidationError);
TCAL_DEFINE_ERROR(DegenerateViews, NumericalError);
TCAL_DEFINE_ERROR(DegeneratePoints, NumericalError);
TCAL_DEFINE_ERROR(SingularNormalEquations, NumericalError);
TCAL_DEFINE_ERROR(NoConvergence, NumericalError);
TCAL_DEFINE_ERROR(NoViews, ValidationError);
TCAL_DEFINE_ERROR(EmptyRoi, ValidationError);
TCAL_DEFINE_ERROR(BoardOutOfView, NumericalError);
TCAL_DEFINE_ERROR(UnknownPreset, ValidationError);

#undef TCAL_DEFINE_ERROR

// Frame-level detection failure; remembers which pipeline stage gave up.
struct DetectionFailed : NumericalError {
  DetectionFailed(const std::string& stage_, const std::string& msg)
      : NumericalError("DetectionFailed[" + stage_ + "]: " + msg), stage(stage_) {}
  std::string stage;
};

}  // namespace tcal
