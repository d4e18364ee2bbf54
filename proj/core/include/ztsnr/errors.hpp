#pragma once

#include <stdexcept>
#include <string>

namespace ztsnr {

// Argument validation failures throw std::invalid_argument directly.
// The exception types below name the domain-specific failure modes so
// callers (and the CLI) can report them distinctly.

// epsilon-parameterization requested at a timestep with alpha_bar == 0,
// where the noise-prediction inversion is undefined.
struct SingularParameterizationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An input whose statistics make the requested operation meaningless,
// e.g. guidance rescale on a constant tensor.
struct DegenerateInputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Training produced a non-finite loss.
struct TrainingDivergedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Checkpoint file is missing, truncated, or has a bad magic/version.
struct CheckpointFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ztsnr
