#include "hemocyte/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>

#include "hemocyte/error.hpp"
#include "hemocyte/smo.hpp"

namespace hemocyte {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

nlohmann::json matrix_to_json(const FeatureMatrix& m) {
  nlohmann::json j;
  j["rows"] = m.rows;
  j["cols"] = m.cols;
  j["data"] = m.data;
  return j;
}

FeatureMatrix matrix_from_json(const nlohmann::json& j) {
  FeatureMatrix m;
  m.rows = j.at("rows").get<int>();
  m.cols = j.at("cols").get<int>();
  m.data = j.at("data").get<std::vector<float>>();
  if (m.rows < 0 || m.cols < 0 ||
      m.data.size() != static_cast<size_t>(m.rows) * static_cast<size_t>(m.cols))
    throw Error(ErrorCode::InvalidData, "matrix_from_json: shape does not match data length");
  return m;
}

nlohmann::json scaler_to_json(const Standardizer& s) {
  return nlohmann::json{{"mean", s.mean}, {"stdev", s.stdev}};
}

Standardizer scaler_from_json(const nlohmann::json& j) {
  Standardizer s;
  s.mean = j.at("mean").get<std::vector<double>>();
  s.stdev = j.at("stdev").get<std::vector<double>>();
  if (s.mean.size() != s.stdev.size())
    throw Error(ErrorCode::InvalidData, "scaler_from_json: mean/stdev length mismatch");
  return s;
}

int argmax_smallest(const std::vector<double>& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

void check_dim(int got, int want, const char* who) {
  if (got != want)
    throw Error(ErrorCode::DimensionMismatch, std::string(who) + ": vector has dim " +
                                                  std::to_string(got) + ", model expects " +
                                                  std::to_string(want));
}

}  // namespace

void validate_labeled_set(const LabeledSet& data) {
  const int n = data.x.rows;
  const int c = data.num_classes();
  if (n == 0 || data.x.cols == 0)
    throw Error(ErrorCode::InvalidInput, "labeled set is empty");
  if (static_cast<int>(data.y.size()) != n)
    throw Error(ErrorCode::DimensionMismatch, "labeled set: y length does not match rows");
  if (c == 0) throw Error(ErrorCode::InvalidInput, "labeled set: no class names");
  std::vector<int> seen(c, 0);
  for (int i = 0; i < n; ++i) {
    if (data.y[i] < 0 || data.y[i] >= c)
      throw Error(ErrorCode::InvalidData, "labeled set: label out of range at sample " + std::to_string(i));
    ++seen[data.y[i]];
  }
  for (int k = 0; k < c; ++k)
    if (seen[k] == 0)
      throw Error(ErrorCode::EmptyClass, "labeled set: class " + data.class_names[k] + " has no samples");
  for (float v : data.x.data)
    if (std::isnan(v)) throw Error(ErrorCode::InvalidData, "labeled set: NaN feature value");
}

Standardizer Standardizer::fit(const FeatureMatrix& x) {
  if (x.rows == 0 || x.cols == 0)
    throw Error(ErrorCode::InvalidInput, "Standardizer::fit: empty matrix");
  Standardizer s;
  const int d = x.cols;
  s.mean.assign(d, 0.0);
  s.stdev.assign(d, 0.0);
  for (int r = 0; r < x.rows; ++r) {
    const float* row = x.row(r);
    for (int j = 0; j < d; ++j) s.mean[j] += row[j];
  }
  for (int j = 0; j < d; ++j) s.mean[j] /= x.rows;
  for (int r = 0; r < x.rows; ++r) {
    const float* row = x.row(r);
    for (int j = 0; j < d; ++j) {
      const double dv = row[j] - s.mean[j];
      s.stdev[j] += dv * dv;
    }
  }
  for (int j = 0; j < d; ++j) s.stdev[j] = std::max(std::sqrt(s.stdev[j] / x.rows), 1e-12);
  return s;
}

void Standardizer::apply(const float* in, float* out, int n) const {
  check_dim(n, dim(), "Standardizer::apply");
  for (int j = 0; j < n; ++j)
    out[j] = static_cast<float>((in[j] - mean[j]) / stdev[j]);
}

std::vector<float> Standardizer::apply_vec(const float* in, int n) const {
  std::vector<float> out(n);
  apply(in, out.data(), n);
  return out;
}

FeatureMatrix Standardizer::apply_matrix(const FeatureMatrix& x) const {
  FeatureMatrix out = FeatureMatrix::make(x.rows, x.cols);
  for (int r = 0; r < x.rows; ++r) apply(x.row(r), out.row(r), x.cols);
  return out;
}

std::vector<int> Classifier::predict_batch(const FeatureMatrix& x) const {
  std::vector<int> out(x.rows);
  for (int r = 0; r < x.rows; ++r) out[r] = predict(x.row(r), x.cols);
  return out;
}

// ---- KNN ----

ClassifierPtr knn_train(const LabeledSet& data, int k) {
  validate_labeled_set(data);
  if (k < 1 || k > data.x.rows)
    throw Error(ErrorCode::InvalidParams,
                "knn_train: k must be in [1, N], got " + std::to_string(k));
  auto m = std::make_unique<KnnClassifier>();
  m->class_names = data.class_names;
  m->k = k;
  m->scaler = Standardizer::fit(data.x);
  m->exemplars = m->scaler.apply_matrix(data.x);
  m->labels = data.y;
  return m;
}

int KnnClassifier::predict(const float* v, int dim) const {
  check_dim(dim, exemplars.cols, "knn_predict");
  std::vector<float> z = scaler.apply_vec(v, dim);
  const int n = exemplars.rows;
  std::vector<std::pair<double, int>> dist(n);
  for (int i = 0; i < n; ++i) {
    const float* row = exemplars.row(i);
    double acc = 0.0;
    for (int j = 0; j < dim; ++j) {
      const double d = static_cast<double>(z[j]) - row[j];
      acc += d * d;
    }
    dist[i] = {acc, i};
  }
  // pair ordering puts the lower sample index first on distance ties
  std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
  std::vector<double> votes(num_classes(), 0.0);
  for (int i = 0; i < k; ++i) votes[labels[dist[i].second]] += 1.0;
  return argmax_smallest(votes);
}

std::string KnnClassifier::to_json() const {
  nlohmann::json j;
  j["family"] = "knn";
  j["version"] = 1;
  j["class_names"] = class_names;
  j["k"] = k;
  j["scaler"] = scaler_to_json(scaler);
  j["labels"] = labels;
  j["exemplars"] = matrix_to_json(exemplars);
  return j.dump();
}

// ---- CART tree ----

namespace {

double gini_from_counts(const std::vector<int>& counts, int n) {
  if (n == 0) return 0.0;
  double acc = 0.0;
  for (int c : counts) {
    const double p = static_cast<double>(c) / n;
    acc += p * p;
  }
  return 1.0 - acc;
}

int majority_class(const std::vector<int>& counts) {
  int best = 0;
  for (int c = 1; c < static_cast<int>(counts.size()); ++c)
    if (counts[c] > counts[best]) best = c;
  return best;
}

struct SplitChoice {
  bool ok = false;
  int feature = -1;
  float threshold = 0.0f;
  double gain = -1.0;  // decrease of unnormalized weighted impurity
};

// Best axis-aligned split of the given samples. Thresholds are midpoints of
// consecutive distinct values; features and thresholds are scanned in
// ascending order and only strictly better gains replace the incumbent, so
// the choice is deterministic.
SplitChoice best_split(const FeatureMatrix& x, const std::vector<int>& y, int num_classes,
                       const std::vector<int>& idx, const std::vector<int>& counts) {
  SplitChoice best;
  const int n = static_cast<int>(idx.size());
  const double parent = gini_from_counts(counts, n) * n;
  std::vector<int> order(idx);
  std::vector<int> left_counts(num_classes);
  for (int f = 0; f < x.cols; ++f) {
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      const float va = x.at(a, f), vb = x.at(b, f);
      return va < vb || (va == vb && a < b);
    });
    std::fill(left_counts.begin(), left_counts.end(), 0);
    std::vector<int> right_counts(counts);
    for (int p = 1; p < n; ++p) {
      const int moved = order[p - 1];
      ++left_counts[y[moved]];
      --right_counts[y[moved]];
      const float lo = x.at(order[p - 1], f);
      const float hi = x.at(order[p], f);
      if (lo == hi) continue;
      float thr = static_cast<float>((static_cast<double>(lo) + hi) / 2.0);
      if (thr >= hi) thr = lo;  // guard against midpoint rounding up to hi
      const double gain = parent - gini_from_counts(left_counts, p) * p -
                          gini_from_counts(right_counts, n - p) * (n - p);
      if (gain > best.gain) {
        best.ok = true;
        best.feature = f;
        best.threshold = thr;
        best.gain = gain;
      }
    }
  }
  return best;
}

}  // namespace

ClassifierPtr tree_train(const LabeledSet& data, int max_splits) {
  validate_labeled_set(data);
  if (max_splits < 1)
    throw Error(ErrorCode::InvalidParams, "tree_train: max_splits must be >= 1");
  auto m = std::make_unique<TreeClassifier>();
  m->class_names = data.class_names;
  m->max_splits = max_splits;
  m->dim = data.x.cols;

  const int total = data.x.rows;
  const int nc = data.num_classes();

  std::vector<std::vector<int>> samples;   // per node
  std::vector<std::vector<int>> counts;    // per node
  std::vector<SplitChoice> pending;        // cached best split per node
  std::vector<char> open;                  // node is a leaf still eligible for splitting

  auto add_node = [&](std::vector<int>&& idx) {
    std::vector<int> cnt(nc, 0);
    for (int i : idx) ++cnt[data.y[i]];
    TreeNode node;
    node.label = majority_class(cnt);
    const int id = static_cast<int>(m->nodes.size());
    m->nodes.push_back(node);
    const bool impure = gini_from_counts(cnt, static_cast<int>(idx.size())) > 0.0;
    SplitChoice choice;
    if (impure) choice = best_split(data.x, data.y, nc, idx, cnt);
    open.push_back(choice.ok ? 1 : 0);
    pending.push_back(choice);
    samples.push_back(std::move(idx));
    counts.push_back(std::move(cnt));
    return id;
  };

  std::vector<int> all(total);
  std::iota(all.begin(), all.end(), 0);
  add_node(std::move(all));

  double impurity = gini_from_counts(counts[0], total);
  m->impurity_trace.push_back(impurity);

  for (int split = 0; split < max_splits; ++split) {
    int pick = -1;
    for (int id = 0; id < static_cast<int>(m->nodes.size()); ++id)
      if (open[id] && (pick < 0 || pending[id].gain > pending[pick].gain)) pick = id;
    if (pick < 0) break;

    const SplitChoice& choice = pending[pick];
    std::vector<int> left_idx, right_idx;
    for (int i : samples[pick]) {
      if (data.x.at(i, choice.feature) <= choice.threshold)
        left_idx.push_back(i);
      else
        right_idx.push_back(i);
    }
    impurity -= choice.gain / total;
    m->nodes[pick].feature = choice.feature;
    m->nodes[pick].threshold = choice.threshold;
    open[pick] = 0;
    samples[pick].clear();
    const int l = add_node(std::move(left_idx));
    const int r = add_node(std::move(right_idx));
    m->nodes[pick].left = l;
    m->nodes[pick].right = r;
    m->impurity_trace.push_back(impurity);
  }
  return m;
}

int TreeClassifier::predict(const float* v, int vdim) const {
  check_dim(vdim, dim, "tree_predict");
  int id = 0;
  while (nodes[id].feature >= 0)
    id = v[nodes[id].feature] <= nodes[id].threshold ? nodes[id].left : nodes[id].right;
  return nodes[id].label;
}

std::string TreeClassifier::to_json() const {
  nlohmann::json j;
  j["family"] = "tree";
  j["version"] = 1;
  j["class_names"] = class_names;
  j["max_splits"] = max_splits;
  j["dim"] = dim;
  j["impurity_trace"] = impurity_trace;
  nlohmann::json arr = nlohmann::json::array();
  for (const TreeNode& n : nodes)
    arr.push_back({{"f", n.feature}, {"t", n.threshold}, {"l", n.left}, {"r", n.right}, {"c", n.label}});
  j["nodes"] = arr;
  return j.dump();
}

int tree_preset_splits(const std::string& name) {
  if (name == "coarse") return 3;
  if (name == "medium") return 20;
  if (name == "fine") return 100;
  throw Error(ErrorCode::ConfigError, "unknown tree preset: " + name);
}

// ---- Gaussian discriminants ----

namespace {

// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
std::vector<double> cholesky_lower(const std::vector<double>& a, int d) {
  std::vector<double> l(static_cast<size_t>(d) * d, 0.0);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j <= i; ++j) {
      double acc = a[static_cast<size_t>(i) * d + j];
      for (int k = 0; k < j; ++k)
        acc -= l[static_cast<size_t>(i) * d + k] * l[static_cast<size_t>(j) * d + k];
      if (i == j) {
        if (acc <= 0.0)
          throw Error(ErrorCode::DegenerateData, "covariance not positive definite after regularization");
        l[static_cast<size_t>(i) * d + i] = std::sqrt(acc);
      } else {
        l[static_cast<size_t>(i) * d + j] = acc / l[static_cast<size_t>(j) * d + j];
      }
    }
  }
  return l;
}

void regularize(std::vector<double>& cov, int d) {
  double diag = 0.0;
  for (int i = 0; i < d; ++i) diag += cov[static_cast<size_t>(i) * d + i];
  double eps = 1e-6 * (diag / d);
  if (!(eps > 0.0)) eps = 1e-12;
  for (int i = 0; i < d; ++i) cov[static_cast<size_t>(i) * d + i] += eps;
}

double mahalanobis_sq(const double* l, int d, const double* w) {
  // forward substitution of L y = w, then |y|^2
  std::vector<double> y(d);
  double acc = 0.0;
  for (int i = 0; i < d; ++i) {
    double v = w[i];
    for (int k = 0; k < i; ++k) v -= l[static_cast<size_t>(i) * d + k] * y[k];
    y[i] = v / l[static_cast<size_t>(i) * d + i];
    acc += y[i] * y[i];
  }
  return acc;
}

double log_det_from_chol(const std::vector<double>& l, int d) {
  double acc = 0.0;
  for (int i = 0; i < d; ++i) acc += std::log(l[static_cast<size_t>(i) * d + i]);
  return 2.0 * acc;
}

}  // namespace

ClassifierPtr discriminant_train(const LabeledSet& data, DiscriminantMode mode) {
  validate_labeled_set(data);
  const int n = data.x.rows;
  const int c = data.num_classes();
  const int d = data.x.cols;
  if (n < c + 1)
    throw Error(ErrorCode::InsufficientData,
                "discriminant_train: need at least C+1 samples, got " + std::to_string(n));

  std::vector<int> class_count(c, 0);
  for (int y : data.y) ++class_count[y];
  if (mode == DiscriminantMode::Quadratic)
    for (int k = 0; k < c; ++k)
      if (class_count[k] < 2)
        throw Error(ErrorCode::InsufficientClassData,
                    "discriminant_train: class " + data.class_names[k] +
                        " has fewer than 2 samples (quadratic mode)");

  auto m = std::make_unique<DiscriminantClassifier>();
  m->class_names = data.class_names;
  m->mode = mode;
  m->dim = d;
  m->scaler = Standardizer::fit(data.x);
  FeatureMatrix z = m->scaler.apply_matrix(data.x);

  m->log_priors.resize(c);
  for (int k = 0; k < c; ++k) m->log_priors[k] = std::log(static_cast<double>(class_count[k]) / n);

  m->means.assign(static_cast<size_t>(c) * d, 0.0);
  for (int r = 0; r < n; ++r) {
    const float* row = z.row(r);
    double* mu = m->means.data() + static_cast<size_t>(data.y[r]) * d;
    for (int j = 0; j < d; ++j) mu[j] += row[j];
  }
  for (int k = 0; k < c; ++k) {
    double* mu = m->means.data() + static_cast<size_t>(k) * d;
    for (int j = 0; j < d; ++j) mu[j] /= class_count[k];
  }

  std::vector<std::vector<double>> scatter(c, std::vector<double>(static_cast<size_t>(d) * d, 0.0));
  std::vector<double> w(d);
  for (int r = 0; r < n; ++r) {
    const float* row = z.row(r);
    const double* mu = m->means.data() + static_cast<size_t>(data.y[r]) * d;
    for (int j = 0; j < d; ++j) w[j] = row[j] - mu[j];
    std::vector<double>& s = scatter[data.y[r]];
    for (int i = 0; i < d; ++i)
      for (int j = 0; j <= i; ++j) s[static_cast<size_t>(i) * d + j] += w[i] * w[j];
  }
  auto mirror = [&](std::vector<double>& s) {
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) s[static_cast<size_t>(i) * d + j] = s[static_cast<size_t>(j) * d + i];
  };

  if (mode == DiscriminantMode::Linear) {
    std::vector<double> pooled(static_cast<size_t>(d) * d, 0.0);
    for (int k = 0; k < c; ++k)
      for (size_t t = 0; t < pooled.size(); ++t) pooled[t] += scatter[k][t];
    for (double& v : pooled) v /= (n - c);
    mirror(pooled);
    regularize(pooled, d);
    std::vector<double> l = cholesky_lower(pooled, d);
    m->log_dets.push_back(log_det_from_chol(l, d));
    m->chol = std::move(l);
  } else {
    m->chol.resize(static_cast<size_t>(c) * d * d);
    m->log_dets.resize(c);
    for (int k = 0; k < c; ++k) {
      std::vector<double>& cov = scatter[k];
      for (double& v : cov) v /= (class_count[k] - 1);
      mirror(cov);
      regularize(cov, d);
      std::vector<double> l = cholesky_lower(cov, d);
      m->log_dets[k] = log_det_from_chol(l, d);
      std::copy(l.begin(), l.end(), m->chol.begin() + static_cast<size_t>(k) * d * d);
    }
  }
  return m;
}

std::vector<double> DiscriminantClassifier::scores(const float* v, int vdim) const {
  check_dim(vdim, dim, "discriminant_predict");
  std::vector<float> z = scaler.apply_vec(v, vdim);
  const int c = num_classes();
  const double norm_const = 0.5 * dim * std::log(kTwoPi);
  std::vector<double> out(c);
  std::vector<double> w(dim);
  for (int k = 0; k < c; ++k) {
    const double* mu = means.data() + static_cast<size_t>(k) * dim;
    for (int j = 0; j < dim; ++j) w[j] = static_cast<double>(z[j]) - mu[j];
    const double* lptr;
    double ld;
    if (mode == DiscriminantMode::Linear) {
      lptr = chol.data();
      ld = log_dets[0];
    } else {
      lptr = chol.data() + static_cast<size_t>(k) * dim * dim;
      ld = log_dets[k];
    }
    out[k] = log_priors[k] - norm_const - 0.5 * ld - 0.5 * mahalanobis_sq(lptr, dim, w.data());
  }
  return out;
}

int DiscriminantClassifier::predict(const float* v, int vdim) const {
  return argmax_smallest(scores(v, vdim));
}

std::string DiscriminantClassifier::to_json() const {
  nlohmann::json j;
  j["family"] = family();
  j["version"] = 1;
  j["class_names"] = class_names;
  j["dim"] = dim;
  j["scaler"] = scaler_to_json(scaler);
  j["log_priors"] = log_priors;
  j["means"] = means;
  j["chol"] = chol;
  j["log_dets"] = log_dets;
  return j.dump();
}

// ---- Gaussian Naive Bayes ----

ClassifierPtr gnb_train(const LabeledSet& data) {
  validate_labeled_set(data);
  const int n = data.x.rows;
  const int c = data.num_classes();
  const int d = data.x.cols;
  if (n < c)
    throw Error(ErrorCode::InsufficientData, "gnb_train: need at least C samples");

  auto m = std::make_unique<GnbClassifier>();
  m->class_names = data.class_names;
  m->dim = d;

  std::vector<int> class_count(c, 0);
  for (int y : data.y) ++class_count[y];
  m->log_priors.resize(c);
  for (int k = 0; k < c; ++k) m->log_priors[k] = std::log(static_cast<double>(class_count[k]) / n);

  m->means.assign(static_cast<size_t>(c) * d, 0.0);
  for (int r = 0; r < n; ++r) {
    const float* row = data.x.row(r);
    double* mu = m->means.data() + static_cast<size_t>(data.y[r]) * d;
    for (int j = 0; j < d; ++j) mu[j] += row[j];
  }
  for (int k = 0; k < c; ++k) {
    double* mu = m->means.data() + static_cast<size_t>(k) * d;
    for (int j = 0; j < d; ++j) mu[j] /= class_count[k];
  }

  m->variances.assign(static_cast<size_t>(c) * d, 0.0);
  for (int r = 0; r < n; ++r) {
    const float* row = data.x.row(r);
    const double* mu = m->means.data() + static_cast<size_t>(data.y[r]) * d;
    double* var = m->variances.data() + static_cast<size_t>(data.y[r]) * d;
    for (int j = 0; j < d; ++j) {
      const double dv = row[j] - mu[j];
      var[j] += dv * dv;
    }
  }

  std::vector<double> gmean(d, 0.0), gvar(d, 0.0);
  for (int r = 0; r < n; ++r) {
    const float* row = data.x.row(r);
    for (int j = 0; j < d; ++j) gmean[j] += row[j];
  }
  for (int j = 0; j < d; ++j) gmean[j] /= n;
  for (int r = 0; r < n; ++r) {
    const float* row = data.x.row(r);
    for (int j = 0; j < d; ++j) {
      const double dv = row[j] - gmean[j];
      gvar[j] += dv * dv;
    }
  }
  for (int j = 0; j < d; ++j) gvar[j] /= n;

  for (int k = 0; k < c; ++k) {
    double* var = m->variances.data() + static_cast<size_t>(k) * d;
    for (int j = 0; j < d; ++j)
      var[j] = std::max(var[j] / class_count[k], 1e-9 * (gvar[j] + 1e-12));
  }
  return m;
}

std::vector<double> GnbClassifier::scores(const float* v, int vdim) const {
  check_dim(vdim, dim, "gnb_predict");
  const int c = num_classes();
  std::vector<double> out(c);
  for (int k = 0; k < c; ++k) {
    const double* mu = means.data() + static_cast<size_t>(k) * dim;
    const double* var = variances.data() + static_cast<size_t>(k) * dim;
    double acc = log_priors[k];
    for (int j = 0; j < dim; ++j) {
      const double dv = v[j] - mu[j];
      acc += -0.5 * std::log(kTwoPi * var[j]) - dv * dv / (2.0 * var[j]);
    }
    out[k] = acc;
  }
  return out;
}

int GnbClassifier::predict(const float* v, int vdim) const {
  return argmax_smallest(scores(v, vdim));
}

std::string GnbClassifier::to_json() const {
  nlohmann::json j;
  j["family"] = "gnb";
  j["version"] = 1;
  j["class_names"] = class_names;
  j["dim"] = dim;
  j["log_priors"] = log_priors;
  j["means"] = means;
  j["variances"] = variances;
  return j.dump();
}

// ---- SVM ----

const char* svm_kernel_name(SvmKernel k) {
  switch (k) {
    case SvmKernel::Linear: return "linear";
    case SvmKernel::Poly2: return "quadratic";
    case SvmKernel::Poly3: return "cubic";
    case SvmKernel::Rbf: return "rbf";
  }
  return "rbf";
}

SvmKernel svm_kernel_from_name(const std::string& name) {
  if (name == "linear") return SvmKernel::Linear;
  if (name == "quadratic" || name == "poly2") return SvmKernel::Poly2;
  if (name == "cubic" || name == "poly3") return SvmKernel::Poly3;
  if (name == "rbf" || name == "gaussian") return SvmKernel::Rbf;
  throw Error(ErrorCode::ConfigError, "unknown svm kernel: " + name);
}

double svm_kernel_eval(SvmKernel kernel, double gamma, const float* a, const float* b, int dim) {
  if (kernel == SvmKernel::Rbf) {
    double acc = 0.0;
    for (int j = 0; j < dim; ++j) {
      const double d = static_cast<double>(a[j]) - b[j];
      acc += d * d;
    }
    return std::exp(-gamma * acc);
  }
  double dot = 0.0;
  for (int j = 0; j < dim; ++j) dot += static_cast<double>(a[j]) * b[j];
  switch (kernel) {
    case SvmKernel::Linear: return dot;
    case SvmKernel::Poly2: return (dot + 1.0) * (dot + 1.0);
    case SvmKernel::Poly3: return (dot + 1.0) * (dot + 1.0) * (dot + 1.0);
    default: return dot;
  }
}

ClassifierPtr svm_train(const LabeledSet& data, const SvmParams& params) {
  validate_labeled_set(data);
  if (!(params.c > 0.0)) throw Error(ErrorCode::InvalidParams, "svm_train: C must be positive");
  const int c = data.num_classes();
  const int d = data.x.cols;

  auto m = std::make_unique<SvmClassifier>();
  m->class_names = data.class_names;
  m->params = params;
  if (m->params.gamma <= 0.0) m->params.gamma = 1.0 / d;
  m->scaler = Standardizer::fit(data.x);
  FeatureMatrix z = m->scaler.apply_matrix(data.x);

  for (int a = 0; a < c; ++a) {
    for (int b = a + 1; b < c; ++b) {
      std::vector<int> idx;
      for (int r = 0; r < z.rows; ++r)
        if (data.y[r] == a || data.y[r] == b) idx.push_back(r);
      FeatureMatrix sub = FeatureMatrix::make(static_cast<int>(idx.size()), d);
      std::vector<int> suby(idx.size());
      for (size_t t = 0; t < idx.size(); ++t) {
        std::copy(z.row(idx[t]), z.row(idx[t]) + d, sub.row(static_cast<int>(t)));
        suby[t] = data.y[idx[t]] == a ? 1 : -1;
      }
      SmoResult r = smo_train(sub, suby, m->params.kernel, m->params.c, m->params.gamma,
                              m->params.tol, m->params.max_passes);
      SvmBinary bin;
      bin.pos_class = a;
      bin.neg_class = b;
      bin.b = r.b;
      bin.converged = r.converged;
      int n_sv = 0;
      for (double alpha : r.alpha)
        if (alpha > 1e-12) ++n_sv;
      bin.sv = FeatureMatrix::make(n_sv, d);
      bin.coef.reserve(n_sv);
      int out_row = 0;
      for (size_t t = 0; t < r.alpha.size(); ++t) {
        if (r.alpha[t] <= 1e-12) continue;
        std::copy(sub.row(static_cast<int>(t)), sub.row(static_cast<int>(t)) + d, bin.sv.row(out_row++));
        bin.coef.push_back(r.alpha[t] * suby[t]);
      }
      m->binaries.push_back(std::move(bin));
    }
  }
  return m;
}

double SvmClassifier::decision(const SvmBinary& bin, const float* z) const {
  double acc = bin.b;
  for (int s = 0; s < bin.sv.rows; ++s)
    acc += bin.coef[s] * svm_kernel_eval(params.kernel, params.gamma, bin.sv.row(s), z, bin.sv.cols);
  return acc;
}

int SvmClassifier::predict(const float* v, int dim) const {
  check_dim(dim, scaler.dim(), "svm_predict");
  std::vector<float> z = scaler.apply_vec(v, dim);
  std::vector<double> votes(num_classes(), 0.0);
  for (const SvmBinary& bin : binaries) {
    const double f = decision(bin, z.data());
    votes[f < 0.0 ? bin.neg_class : bin.pos_class] += 1.0;  // f == 0 goes to the smaller id
  }
  return argmax_smallest(votes);
}

bool SvmClassifier::converged() const {
  for (const SvmBinary& bin : binaries)
    if (!bin.converged) return false;
  return true;
}

std::string SvmClassifier::to_json() const {
  nlohmann::json j;
  j["family"] = "svm";
  j["version"] = 1;
  j["class_names"] = class_names;
  j["kernel"] = svm_kernel_name(params.kernel);
  j["c"] = params.c;
  j["gamma"] = params.gamma;
  j["tol"] = params.tol;
  j["max_passes"] = params.max_passes;
  j["scaler"] = scaler_to_json(scaler);
  nlohmann::json arr = nlohmann::json::array();
  for (const SvmBinary& bin : binaries) {
    arr.push_back({{"pos", bin.pos_class},
                   {"neg", bin.neg_class},
                   {"b", bin.b},
                   {"converged", bin.converged},
                   {"coef", bin.coef},
                   {"sv", matrix_to_json(bin.sv)}});
  }
  j["binaries"] = arr;
  return j.dump();
}

// ---- serialization ----

namespace {

ClassifierPtr knn_from_json(const nlohmann::json& j) {
  auto m = std::make_unique<KnnClassifier>();
  m->k = j.at("k").get<int>();
  m->scaler = scaler_from_json(j.at("scaler"));
  m->labels = j.at("labels").get<std::vector<int>>();
  m->exemplars = matrix_from_json(j.at("exemplars"));
  if (static_cast<int>(m->labels.size()) != m->exemplars.rows)
    throw Error(ErrorCode::InvalidData, "knn model: label count mismatch");
  return m;
}

ClassifierPtr tree_from_json(const nlohmann::json& j) {
  auto m = std::make_unique<TreeClassifier>();
  m->max_splits = j.at("max_splits").get<int>();
  m->dim = j.at("dim").get<int>();
  m->impurity_trace = j.at("impurity_trace").get<std::vector<double>>();
  for (const auto& n : j.at("nodes")) {
    TreeNode node;
    node.feature = n.at("f").get<int>();
    node.threshold = n.at("t").get<float>();
    node.left = n.at("l").get<int>();
    node.right = n.at("r").get<int>();
    node.label = n.at("c").get<int>();
    m->nodes.push_back(node);
  }
  if (m->nodes.empty()) throw Error(ErrorCode::InvalidData, "tree model: no nodes");
  return m;
}

ClassifierPtr discriminant_from_json(const nlohmann::json& j, DiscriminantMode mode) {
  auto m = std::make_unique<DiscriminantClassifier>();
  m->mode = mode;
  m->dim = j.at("dim").get<int>();
  m->scaler = scaler_from_json(j.at("scaler"));
  m->log_priors = j.at("log_priors").get<std::vector<double>>();
  m->means = j.at("means").get<std::vector<double>>();
  m->chol = j.at("chol").get<std::vector<double>>();
  m->log_dets = j.at("log_dets").get<std::vector<double>>();
  return m;
}

ClassifierPtr gnb_from_json(const nlohmann::json& j) {
  auto m = std::make_unique<GnbClassifier>();
  m->dim = j.at("dim").get<int>();
  m->log_priors = j.at("log_priors").get<std::vector<double>>();
  m->means = j.at("means").get<std::vector<double>>();
  m->variances = j.at("variances").get<std::vector<double>>();
  return m;
}

ClassifierPtr svm_from_json(const nlohmann::json& j) {
  auto m = std::make_unique<SvmClassifier>();
  m->params.kernel = svm_kernel_from_name(j.at("kernel").get<std::string>());
  m->params.c = j.at("c").get<double>();
  m->params.gamma = j.at("gamma").get<double>();
  m->params.tol = j.at("tol").get<double>();
  m->params.max_passes = j.at("max_passes").get<int>();
  m->scaler = scaler_from_json(j.at("scaler"));
  for (const auto& b : j.at("binaries")) {
    SvmBinary bin;
    bin.pos_class = b.at("pos").get<int>();
    bin.neg_class = b.at("neg").get<int>();
    bin.b = b.at("b").get<double>();
    bin.converged = b.at("converged").get<bool>();
    bin.coef = b.at("coef").get<std::vector<double>>();
    bin.sv = matrix_from_json(b.at("sv"));
    if (bin.coef.size() != static_cast<size_t>(bin.sv.rows))
      throw Error(ErrorCode::InvalidData, "svm model: coefficient count mismatch");
    m->binaries.push_back(std::move(bin));
  }
  return m;
}

}  // namespace

ClassifierPtr deserialize_classifier(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidData, std::string("classifier json parse failed: ") + e.what());
  }
  try {
    const std::string family = j.at("family").get<std::string>();
    const int version = j.at("version").get<int>();
    if (version != 1)
      throw Error(ErrorCode::InvalidData, "unsupported model version " + std::to_string(version));
    ClassifierPtr m;
    if (family == "knn")
      m = knn_from_json(j);
    else if (family == "tree")
      m = tree_from_json(j);
    else if (family == "lda")
      m = discriminant_from_json(j, DiscriminantMode::Linear);
    else if (family == "qda")
      m = discriminant_from_json(j, DiscriminantMode::Quadratic);
    else if (family == "gnb")
      m = gnb_from_json(j);
    else if (family == "svm")
      m = svm_from_json(j);
    else
      throw Error(ErrorCode::InvalidData, "unknown classifier family: " + family);
    m->class_names = j.at("class_names").get<std::vector<std::string>>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidData, std::string("classifier json missing field: ") + e.what());
  }
}

// ---- declarative specs ----

ClassifierSpec parse_classifier_spec(const std::string& text) {
  ClassifierSpec spec;
  std::string head = text;
  std::string rest;
  if (auto colon = text.find(':'); colon != std::string::npos) {
    head = text.substr(0, colon);
    rest = text.substr(colon + 1);
  }
  std::vector<std::string> parts;
  size_t start = 0;
  while (start <= rest.size() && !rest.empty()) {
    size_t comma = rest.find(',', start);
    if (comma == std::string::npos) {
      parts.push_back(rest.substr(start));
      break;
    }
    parts.push_back(rest.substr(start, comma - start));
    start = comma + 1;
  }

  auto parse_int = [&](const std::string& s, const char* what) {
    try {
      size_t pos = 0;
      const int v = std::stoi(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw Error(ErrorCode::ConfigError, std::string("bad ") + what + " in classifier spec: " + text);
    }
  };
  auto parse_double = [&](const std::string& s, const char* what) {
    try {
      size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw Error(ErrorCode::ConfigError, std::string("bad ") + what + " in classifier spec: " + text);
    }
  };

  spec.algorithm = head;
  if (head == "knn") {
    spec.knn_k = 1;
    for (const std::string& p : parts) {
      if (p.rfind("k=", 0) == 0)
        spec.knn_k = parse_int(p.substr(2), "k");
      else if (!p.empty())
        spec.knn_k = parse_int(p, "k");
    }
    spec.variant = "k=" + std::to_string(spec.knn_k);
  } else if (head == "tree") {
    if (parts.empty() || parts[0].empty())
      throw Error(ErrorCode::ConfigError, "tree spec needs a preset or split count: " + text);
    const std::string& p = parts[0];
    if (p == "coarse" || p == "medium" || p == "fine") {
      spec.tree_splits = tree_preset_splits(p);
      spec.variant = p;
    } else {
      spec.tree_splits = parse_int(p, "split count");
      spec.variant = p;
    }
  } else if (head == "lda" || head == "qda" || head == "gnb") {
    if (!rest.empty())
      throw Error(ErrorCode::ConfigError, head + " spec takes no parameters: " + text);
  } else if (head == "svm") {
    if (parts.empty() || parts[0].empty())
      throw Error(ErrorCode::ConfigError, "svm spec needs a kernel: " + text);
    spec.svm.kernel = svm_kernel_from_name(parts[0]);
    spec.variant = svm_kernel_name(spec.svm.kernel);
    for (size_t i = 1; i < parts.size(); ++i) {
      const std::string& p = parts[i];
      if (p.rfind("c=", 0) == 0)
        spec.svm.c = parse_double(p.substr(2), "c");
      else if (p.rfind("gamma=", 0) == 0)
        spec.svm.gamma = parse_double(p.substr(6), "gamma");
      else
        throw Error(ErrorCode::ConfigError, "unknown svm option '" + p + "' in spec: " + text);
    }
  } else {
    throw Error(ErrorCode::ConfigError, "unknown classifier algorithm: " + text);
  }
  return spec;
}

ClassifierPtr train_from_spec(const ClassifierSpec& spec, const LabeledSet& data) {
  if (spec.algorithm == "knn") return knn_train(data, spec.knn_k);
  if (spec.algorithm == "tree") return tree_train(data, spec.tree_splits);
  if (spec.algorithm == "lda") return discriminant_train(data, DiscriminantMode::Linear);
  if (spec.algorithm == "qda") return discriminant_train(data, DiscriminantMode::Quadratic);
  if (spec.algorithm == "gnb") return gnb_train(data);
  if (spec.algorithm == "svm") return svm_train(data, spec.svm);
  throw Error(ErrorCode::ConfigError, "unknown classifier algorithm: " + spec.algorithm);
}

}  // namespace hemocyte
