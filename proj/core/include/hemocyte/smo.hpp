#pragma once

#include <vector>

#include "hemocyte/classifiers.hpp"
#include "hemocyte/matrix.hpp"

namespace hemocyte {

// Binary soft-margin SVM solved by sequential minimal optimization.
// Labels must be +1/-1. Exposed separately from the one-vs-one wrapper so the
// dual solution can be checked against small closed-form problems.
struct SmoResult {
  std::vector<double> alpha;
  double b = 0.0;
  bool converged = false;
  int passes = 0;
};

SmoResult smo_train(const FeatureMatrix& x, const std::vector<int>& y, SvmKernel kernel, double c,
                    double gamma, double tol, int max_passes);

}  // namespace hemocyte
