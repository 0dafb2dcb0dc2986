#pragma once

#include <string>
#include <vector>

#include "hemocyte/matrix.hpp"

namespace hemocyte {

// Principal component model fitted to mean-centered data.
// `components` is n_components x dim, row-major; rows are unit-norm and
// mutually orthogonal, ordered by decreasing eigenvalue. Each row is oriented
// so that its largest-magnitude entry is positive. `eigenvalues[i]` is the
// variance captured by component i (singular value squared over N-1).
// `total_variance` is the trace of the sample covariance, so it includes
// variance beyond any truncation of the component list.
struct PcaModel {
  int dim = 0;
  int n_components = 0;
  std::vector<double> mean;
  std::vector<double> components;
  std::vector<double> eigenvalues;
  double total_variance = 0.0;

  const double* component(int i) const { return components.data() + static_cast<size_t>(i) * dim; }
};

// Fits a model on x (rows = samples). Retains min(dim, rows-1) components,
// further capped by max_components when it is positive.
PcaModel pca_fit(const FeatureMatrix& x, int max_components = -1);

// Smallest k such that the first k eigenvalues sum to at least
// fraction * total_variance. fraction must lie in (0, 1]. If even all
// retained components fall short (possible after truncation), returns
// n_components.
int select_k_for_variance(const PcaModel& m, double fraction);

// Projects one vector onto the first k components (k = -1 means all).
std::vector<float> pca_project(const PcaModel& m, const float* v, int dim, int k = -1);
FeatureMatrix pca_project_matrix(const PcaModel& m, const FeatureMatrix& x, int k = -1);

// Maps projected coordinates back to the input space (mean + z * components).
FeatureMatrix pca_reconstruct(const PcaModel& m, const FeatureMatrix& z);

std::string pca_to_json(const PcaModel& m);
PcaModel pca_from_json(const std::string& text);

}  // namespace hemocyte
