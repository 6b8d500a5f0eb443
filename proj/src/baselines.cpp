#include "hifd/baselines.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "hifd/errors.hpp"
#include "hifd/train.hpp"

namespace hifd {

PcaModel pca_fit(const std::vector<Window>& windows, double energy) {
  if (windows.empty()) throw ParameterError("cannot fit a subspace to zero windows");
  if (!(energy > 0.0 && energy <= 1.0)) throw ParameterError("energy share must lie in (0, 1]");
  const std::size_t len = windows.front().size();
  for (const auto& w : windows)
    if (w.size() != len) throw ShapeError("subspace windows must share one length");

  const auto n = static_cast<Eigen::Index>(windows.size());
  const auto t = static_cast<Eigen::Index>(len);
  Eigen::MatrixXd x(n, t);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < t; ++j)
      x(i, j) = windows[static_cast<std::size_t>(i)].voltage[static_cast<std::size_t>(j)];

  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;

  Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double total = sv.sum();
  if (!(total > 0.0)) throw DegeneracyError("windows have no variance to decompose");

  std::size_t rank = 0;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    acc += sv(i);
    ++rank;
    if (acc / total >= energy) break;
  }

  PcaModel m;
  m.input_len = len;
  m.rank = rank;
  m.mean.assign(mean.data(), mean.data() + t);
  m.singular.assign(sv.data(), sv.data() + sv.size());
  m.basis.resize(rank * len);
  const Eigen::MatrixXd& v = svd.matrixV();  // t x r, columns are directions
  for (std::size_t r = 0; r < rank; ++r)
    for (std::size_t j = 0; j < len; ++j)
      m.basis[r * len + j] = v(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(r));
  return m;
}

double pca_error(const PcaModel& m, const Window& w) {
  if (w.size() != m.input_len) throw ShapeError("window does not match the subspace length");
  std::vector<double> e(m.input_len);
  for (std::size_t j = 0; j < m.input_len; ++j) e[j] = w.voltage[j] - m.mean[j];

  // err = ||e||^2 - ||B e||^2 for an orthonormal basis; keep the explicit
  // projection so the identity stays testable against it.
  std::vector<double> coef(m.rank, 0.0);
  for (std::size_t r = 0; r < m.rank; ++r) {
    const double* row = &m.basis[r * m.input_len];
    for (std::size_t j = 0; j < m.input_len; ++j) coef[r] += row[j] * e[j];
  }
  double err = 0.0;
  for (std::size_t j = 0; j < m.input_len; ++j) {
    double recon = 0.0;
    for (std::size_t r = 0; r < m.rank; ++r) recon += coef[r] * m.basis[r * m.input_len + j];
    const double d = e[j] - recon;
    err += d * d;
  }
  return err;
}

ErModel er_fit(const std::vector<Window>& windows) {
  if (windows.empty()) throw ParameterError("cannot fit a trajectory to zero windows");
  ErModel m;
  m.input_len = windows.front().size();
  m.trajectory = pooled_trajectory(windows);
  return m;
}

double er_error(const ErModel& m, const Window& w) {
  if (w.size() != m.input_len) throw ShapeError("window does not match the trajectory length");
  return ellipse::residual(ellipse::design_matrix(w.voltage, w.current), m.trajectory);
}

}  // namespace hifd
