#pragma once

#include <cstddef>
#include <vector>

#include "hifd/ellipse.hpp"
#include "hifd/window.hpp"

namespace hifd {

// Linear subspace scorer: truncated SVD of the mean-centered voltage windows.
struct PcaModel {
  std::size_t input_len = 0;
  std::size_t rank = 0;
  std::vector<double> mean;      // input_len
  std::vector<double> basis;     // rank x input_len, row-major, orthonormal rows
  std::vector<double> singular;  // all singular values, descending
};

// Keeps the smallest rank whose cumulative singular-value share reaches
// `energy`. Throws DegeneracyError when the data has no variance.
PcaModel pca_fit(const std::vector<Window>& windows, double energy = 0.99);

// Squared distance between the centered voltage and its subspace projection.
double pca_error(const PcaModel& m, const Window& w);

// Conic-residual scorer: normal-operation trajectory fitted on pooled windows.
struct ErModel {
  std::size_t input_len = 0;
  ellipse::Conic trajectory;
};

ErModel er_fit(const std::vector<Window>& windows);

// Squared conic residual of the window's (voltage, current) rows.
double er_error(const ErModel& m, const Window& w);

}  // namespace hifd
