#ifndef LAGFLOW_CORE_ERRORS_HPP
#define LAGFLOW_CORE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace lagflow {

/** \brief Malformed input: wrong lengths, non-positive extents, bad parameters. */
struct LayoutError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/** \brief Base of failures that the step controller may recover from by shrinking tau. */
struct StepFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A configuration left the admissible set (D_h x <= 0 or det F <= 0).
struct AdmissibilityError : StepFailure {
  using StepFailure::StepFailure;
};

/// Nonlinear iteration did not reach tolerance.
struct ConvergenceError : StepFailure {
  using StepFailure::StepFailure;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Step halving went below the controller's floor.
struct ControllerAbort : std::runtime_error {
  using std::runtime_error::runtime_error;
};

} // namespace lagflow

#endif
