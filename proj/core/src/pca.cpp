#include "hemocyte/pca.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <nlohmann/json.hpp>

#include "hemocyte/error.hpp"

namespace hemocyte {

PcaModel pca_fit(const FeatureMatrix& x, int max_components) {
  if (x.cols <= 0) throw Error(ErrorCode::InvalidInput, "pca_fit: empty feature matrix");
  if (x.rows < 2)
    throw Error(ErrorCode::InsufficientData, "pca_fit: need at least 2 samples, got " + std::to_string(x.rows));
  for (float v : x.data)
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidData, "pca_fit: non-finite feature value");

  const int n = x.rows;
  const int d = x.cols;

  PcaModel m;
  m.dim = d;
  m.mean.assign(d, 0.0);
  for (int r = 0; r < n; ++r) {
    const float* row = x.row(r);
    for (int c = 0; c < d; ++c) m.mean[c] += row[c];
  }
  for (int c = 0; c < d; ++c) m.mean[c] /= n;

  Eigen::MatrixXd centered(n, d);
  for (int r = 0; r < n; ++r) {
    const float* row = x.row(r);
    for (int c = 0; c < d; ++c) centered(r, c) = static_cast<double>(row[c]) - m.mean[c];
  }

  // Trace of the sample covariance; independent of how many components we keep.
  m.total_variance = centered.squaredNorm() / (n - 1);

  int keep = std::min(d, n - 1);
  if (max_components > 0) keep = std::min(keep, max_components);

  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const auto& v = svd.matrixV();  // d x min(n, d), columns are directions

  keep = std::min<int>(keep, static_cast<int>(sv.size()));
  m.n_components = keep;
  m.eigenvalues.resize(keep);
  m.components.assign(static_cast<size_t>(keep) * d, 0.0);
  for (int i = 0; i < keep; ++i) {
    m.eigenvalues[i] = sv(i) * sv(i) / (n - 1);
    double* row = m.components.data() + static_cast<size_t>(i) * d;
    int peak = 0;
    for (int c = 0; c < d; ++c) {
      row[c] = v(c, i);
      if (std::abs(row[c]) > std::abs(row[peak])) peak = c;
    }
    if (row[peak] < 0.0)
      for (int c = 0; c < d; ++c) row[c] = -row[c];
  }
  return m;
}

int select_k_for_variance(const PcaModel& m, double fraction) {
  if (!(fraction > 0.0) || fraction > 1.0)
    throw Error(ErrorCode::InvalidParams, "select_k_for_variance: fraction must be in (0, 1]");
  if (m.n_components <= 0) throw Error(ErrorCode::InvalidInput, "select_k_for_variance: empty model");
  const double target = fraction * m.total_variance;
  const double slack = 1e-9 * std::max(m.total_variance, 1.0);
  double cum = 0.0;
  for (int k = 0; k < m.n_components; ++k) {
    cum += m.eigenvalues[k];
    if (cum + slack >= target) return k + 1;
  }
  return m.n_components;
}

std::vector<float> pca_project(const PcaModel& m, const float* v, int dim, int k) {
  if (dim != m.dim)
    throw Error(ErrorCode::DimensionMismatch, "pca_project: vector has dim " + std::to_string(dim) +
                                                  ", model expects " + std::to_string(m.dim));
  if (k < 0) k = m.n_components;
  if (k == 0 || k > m.n_components)
    throw Error(ErrorCode::InvalidParams, "pca_project: k out of range: " + std::to_string(k));
  std::vector<float> out(k);
  for (int i = 0; i < k; ++i) {
    const double* c = m.component(i);
    double acc = 0.0;
    for (int j = 0; j < dim; ++j) acc += (static_cast<double>(v[j]) - m.mean[j]) * c[j];
    out[i] = static_cast<float>(acc);
  }
  return out;
}

FeatureMatrix pca_project_matrix(const PcaModel& m, const FeatureMatrix& x, int k) {
  if (k < 0) k = m.n_components;
  FeatureMatrix out = FeatureMatrix::make(x.rows, k);
  for (int r = 0; r < x.rows; ++r) {
    std::vector<float> z = pca_project(m, x.row(r), x.cols, k);
    std::copy(z.begin(), z.end(), out.row(r));
  }
  return out;
}

FeatureMatrix pca_reconstruct(const PcaModel& m, const FeatureMatrix& z) {
  if (z.cols > m.n_components)
    throw Error(ErrorCode::DimensionMismatch, "pca_reconstruct: more coordinates than components");
  FeatureMatrix out = FeatureMatrix::make(z.rows, m.dim);
  for (int r = 0; r < z.rows; ++r) {
    const float* zr = z.row(r);
    float* o = out.row(r);
    for (int j = 0; j < m.dim; ++j) {
      double acc = m.mean[j];
      for (int i = 0; i < z.cols; ++i) acc += static_cast<double>(zr[i]) * m.component(i)[j];
      o[j] = static_cast<float>(acc);
    }
  }
  return out;
}

std::string pca_to_json(const PcaModel& m) {
  nlohmann::json j;
  j["type"] = "pca";
  j["version"] = 1;
  j["dim"] = m.dim;
  j["n_components"] = m.n_components;
  j["mean"] = m.mean;
  j["eigenvalues"] = m.eigenvalues;
  j["total_variance"] = m.total_variance;
  nlohmann::json comps = nlohmann::json::array();
  for (int i = 0; i < m.n_components; ++i) {
    comps.push_back(std::vector<double>(m.component(i), m.component(i) + m.dim));
  }
  j["components"] = comps;
  return j.dump();
}

PcaModel pca_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidData, std::string("pca_from_json: parse failed: ") + e.what());
  }
  try {
    if (j.at("type").get<std::string>() != "pca")
      throw Error(ErrorCode::InvalidData, "pca_from_json: wrong type tag");
    PcaModel m;
    m.dim = j.at("dim").get<int>();
    m.n_components = j.at("n_components").get<int>();
    m.mean = j.at("mean").get<std::vector<double>>();
    m.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
    m.total_variance = j.at("total_variance").get<double>();
    const auto& comps = j.at("components");
    if (m.dim <= 0 || m.n_components < 0 || static_cast<int>(m.mean.size()) != m.dim ||
        static_cast<int>(m.eigenvalues.size()) != m.n_components ||
        static_cast<int>(comps.size()) != m.n_components)
      throw Error(ErrorCode::InvalidData, "pca_from_json: inconsistent shapes");
    m.components.reserve(static_cast<size_t>(m.n_components) * m.dim);
    for (const auto& row : comps) {
      auto vals = row.get<std::vector<double>>();
      if (static_cast<int>(vals.size()) != m.dim)
        throw Error(ErrorCode::InvalidData, "pca_from_json: component length mismatch");
      m.components.insert(m.components.end(), vals.begin(), vals.end());
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidData, std::string("pca_from_json: missing field: ") + e.what());
  }
}

}  // namespace hemocyte
