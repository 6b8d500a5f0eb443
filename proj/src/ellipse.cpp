#include "hifd/ellipse.hpp"

#include <cmath>

#include "hifd/errors.hpp"

namespace hifd::ellipse {

DesignMatrix design_matrix(std::span<const double> v, std::span<const double> c) {
  if (v.size() != c.size())
    throw ShapeError("design_matrix: voltage and current lengths differ");
  const auto n = static_cast<Eigen::Index>(v.size());
  DesignMatrix z(n, 5);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double vk = v[static_cast<std::size_t>(k)];
    const double ck = c[static_cast<std::size_t>(k)];
    z(k, 0) = vk * vk;
    z(k, 1) = vk * ck;
    z(k, 2) = ck * ck;
    z(k, 3) = vk;
    z(k, 4) = ck;
  }
  return z;
}

Conic fit_conic(const DesignMatrix& design) {
  if (design.rows() < 5)
    throw SingularFitError("fit_conic: need at least 5 samples");

  // Column scaling derived from the raw channel columns. Raw kV/A units would
  // otherwise push the squared columns 6+ orders of magnitude apart.
  const double sv = design.col(3).cwiseAbs().maxCoeff();
  const double sc = design.col(4).cwiseAbs().maxCoeff();
  if (sv == 0.0 || sc == 0.0)
    throw SingularFitError("fit_conic: constant zero channel");

  const std::array<double, 5> scale = {sv * sv, sv * sc, sc * sc, sv, sc};
  DesignMatrix scaled = design;
  for (int j = 0; j < 5; ++j) scaled.col(j) /= scale[static_cast<std::size_t>(j)];

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(scaled,
                                        Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sing = svd.singularValues();
  const double smax = sing(0);
  const double smin = sing(sing.size() - 1);
  // Condition bound is stated on the normal equations, hence the square.
  if (smin <= 0.0 || (smax / smin) * (smax / smin) >= 1e12)
    throw SingularFitError("fit_conic: degenerate trajectory (condition overflow)");

  const Eigen::VectorXd rhs = -Eigen::VectorXd::Ones(design.rows());
  const Eigen::VectorXd solution = svd.solve(rhs);

  Conic out;
  for (int j = 0; j < 5; ++j)
    out.coeffs[static_cast<std::size_t>(j)] =
        solution(j) / scale[static_cast<std::size_t>(j)];
  return out;
}

Conic conic_from_phasor(const Phasor& p) {
  validate(p);
  const double half = p.phase_lag / 2.0;
  const double a1 = 2.0 * p.v_amp * std::cos(half);
  const double a2 = 2.0 * p.c_amp * std::cos(half);
  const double a3 = 2.0 * p.v_amp * std::sin(half);
  const double a4 = 2.0 * p.c_amp * std::sin(half);

  // (v/a1 + c/a2)^2 + (v/a3 - c/a4)^2 = 1, expanded and normalized so the
  // constant term equals +1.
  const double qv = 1.0 / (a1 * a1) + 1.0 / (a3 * a3);
  const double qvc = 2.0 * (1.0 / (a1 * a2) - 1.0 / (a3 * a4));
  const double qc = 1.0 / (a2 * a2) + 1.0 / (a4 * a4);

  Conic out;
  out.coeffs = {-qv, -qvc, -qc, 0.0, 0.0};
  return out;
}

double residual(const DesignMatrix& design, const Conic& conic) {
  Eigen::Matrix<double, 5, 1> beta;
  for (int j = 0; j < 5; ++j) beta(j) = conic.coeffs[static_cast<std::size_t>(j)];
  return (design * beta + Eigen::VectorXd::Ones(design.rows())).squaredNorm();
}

}  // namespace hifd::ellipse
