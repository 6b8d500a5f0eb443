#pragma once

#include <Eigen/Dense>
#include <array>
#include <span>

#include "hifd/phasor.hpp"

namespace hifd::ellipse {

/// T x 5 matrix with columns [v*v, v*c, c*c, v, c], in that order.
using DesignMatrix = Eigen::Matrix<double, Eigen::Dynamic, 5>;

/// Implicit conic  a*v^2 + b*v*c + c*c^2 + d*v + e*c + 1 = 0, stored as the
/// coefficient vector [a, b, c, d, e]. The unit constant term fixes the
/// overall scale and sign.
struct Conic {
  std::array<double, 5> coeffs{};

  double discriminant() const {
    return coeffs[1] * coeffs[1] - 4.0 * coeffs[0] * coeffs[2];
  }

  /// Real-ellipse test: negative discriminant and a nonzero quadratic part.
  bool is_ellipse() const {
    return discriminant() < 0.0 &&
           !(coeffs[0] == 0.0 && coeffs[1] == 0.0 && coeffs[2] == 0.0);
  }

  /// Signed distance of one (v, c) sample from the conic; one row of the
  /// residual vector.
  double evaluate(double v, double c) const {
    return coeffs[0] * v * v + coeffs[1] * v * c + coeffs[2] * c * c +
           coeffs[3] * v + coeffs[4] * c + 1.0;
  }
};

/// Builds the design matrix from paired samples. No centering or rescaling.
DesignMatrix design_matrix(std::span<const double> v, std::span<const double> c);

/// Least-squares conic through the sampled trajectory: minimizes
/// ||Z*coeffs + 1||^2. Channels are rescaled internally for conditioning and
/// the result is returned in the caller's units. Throws SingularFitError when
/// the trajectory is degenerate (too few rows, rank deficiency, or condition
/// number beyond 1e12 on the scaled normal equations).
Conic fit_conic(const DesignMatrix& design);

/// Conic traced by v(t) = v_amp*cos(wt), c(t) = c_amp*cos(wt - phase_lag).
Conic conic_from_phasor(const Phasor& p);

/// Sum of squared per-sample residuals ||Z*coeffs + 1||^2.
double residual(const DesignMatrix& design, const Conic& conic);

}  // namespace hifd::ellipse
