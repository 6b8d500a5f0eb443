#pragma once

#include <stdexcept>
#include <string>

namespace hifd {

/// Base class for all toolkit errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Mismatched or unusable array dimensions.
struct ShapeError : Error {
  using Error::Error;
};

/// Degenerate geometry: flat trajectory, zero vector, constant channel.
struct DegeneracyError : Error {
  using Error::Error;
};

/// Iterative solver failed to converge.
struct SolverError : Error {
  using Error::Error;
};

/// Sampling-rate preconditions violated (e.g. Nyquist).
struct SamplingError : Error {
  using Error::Error;
};

/// Out-of-range or inconsistent numeric parameter.
struct ParameterError : Error {
  using Error::Error;
};

/// Unknown node, disconnected graph, or non-radial topology.
struct TopologyError : Error {
  using Error::Error;
};

/// Event schedule cannot be realized (overlap, out of range).
struct ScheduleError : Error {
  using Error::Error;
};

/// Least-squares system is rank deficient or too ill-conditioned.
struct SingularFitError : Error {
  using Error::Error;
};

/// Training loss became non-finite.
struct DivergenceError : Error {
  using Error::Error;
};

/// Non-finite intermediate value outside of training loss.
struct NumericalError : Error {
  using Error::Error;
};

/// Threshold calibration impossible (e.g. empty validation set).
struct CalibrationError : Error {
  using Error::Error;
};

/// Invalid run configuration.
struct ConfigError : Error {
  using Error::Error;
};

/// Fusion inputs refer to different time windows.
struct AlignmentError : Error {
  using Error::Error;
};

/// File could not be read, written, or parsed.
struct IoError : Error {
  using Error::Error;
};

}  // namespace hifd
