#pragma once

#include <vector>

namespace hemocyte {

// Row-major matrix of feature values. Rows are samples.
struct FeatureMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<float> data;

  static FeatureMatrix make(int rows, int cols) {
    FeatureMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.data.assign(static_cast<size_t>(rows) * static_cast<size_t>(cols), 0.0f);
    return m;
  }

  bool empty() const { return rows == 0 || cols == 0; }

  float* row(int r) { return data.data() + static_cast<size_t>(r) * cols; }
  const float* row(int r) const { return data.data() + static_cast<size_t>(r) * cols; }

  float& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  float at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
};

}  // namespace hemocyte
