#pragma once

#include "hifd/errors.hpp"

namespace hifd {

/// Steady-state operating point of one node: peak voltage amplitude, peak
/// current amplitude on the upstream line, and the lag of current behind
/// voltage. The lag must lie strictly inside (0, pi); at the endpoints the
/// voltage-current trajectory collapses to a line segment.
struct Phasor {
  double v_amp = 0.0;      // V, peak
  double c_amp = 0.0;      // A, peak
  double phase_lag = 0.0;  // rad
};

inline void validate(const Phasor& p) {
  if (!(p.v_amp > 0.0) || !(p.c_amp > 0.0))
    throw DegeneracyError("phasor amplitudes must be positive");
  if (!(p.phase_lag > 0.0) || !(p.phase_lag < 3.14159265358979323846))
    throw DegeneracyError("phase lag outside (0, pi) degenerates the ellipse");
}

}  // namespace hifd
