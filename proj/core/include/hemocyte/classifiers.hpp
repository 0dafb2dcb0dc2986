#pragma once

#include <memory>
#include <string>
#include <vector>

#include "hemocyte/matrix.hpp"

namespace hemocyte {

// Training data. Labels are 0-based class ids indexing class_names.
struct LabeledSet {
  FeatureMatrix x;
  std::vector<int> y;
  std::vector<std::string> class_names;

  int num_classes() const { return static_cast<int>(class_names.size()); }
};

// Throws on label out of range, missing class, NaN features, or size mismatch.
void validate_labeled_set(const LabeledSet& data);

// Per-dimension z-scoring fitted on the training split. Standard deviations
// are floored at 1e-12 so constant features map to 0 instead of inf.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> stdev;

  static Standardizer fit(const FeatureMatrix& x);
  int dim() const { return static_cast<int>(mean.size()); }
  void apply(const float* in, float* out, int n) const;
  std::vector<float> apply_vec(const float* in, int n) const;
  FeatureMatrix apply_matrix(const FeatureMatrix& x) const;
};

class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual std::string family() const = 0;
  virtual int feature_dim() const = 0;
  virtual int predict(const float* v, int dim) const = 0;
  virtual std::string to_json() const = 0;

  int predict_one(const std::vector<float>& v) const {
    return predict(v.data(), static_cast<int>(v.size()));
  }
  std::vector<int> predict_batch(const FeatureMatrix& x) const;

  int num_classes() const { return static_cast<int>(class_names.size()); }

  std::vector<std::string> class_names;
};

using ClassifierPtr = std::unique_ptr<Classifier>;

// ---- KNN ----

class KnnClassifier final : public Classifier {
 public:
  int k = 1;
  Standardizer scaler;
  FeatureMatrix exemplars;  // standardized training vectors
  std::vector<int> labels;

  std::string family() const override { return "knn"; }
  int feature_dim() const override { return exemplars.cols; }
  int predict(const float* v, int dim) const override;
  std::string to_json() const override;
};

ClassifierPtr knn_train(const LabeledSet& data, int k);

// ---- CART tree ----

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  float threshold = 0.0f;
  int left = -1;
  int right = -1;
  int label = -1;  // majority class at the node
};

class TreeClassifier final : public Classifier {
 public:
  int max_splits = 0;
  int dim = 0;
  std::vector<TreeNode> nodes;          // nodes[0] is the root
  std::vector<double> impurity_trace;   // weighted Gini before and after each split

  std::string family() const override { return "tree"; }
  int feature_dim() const override { return dim; }
  int predict(const float* v, int dim) const override;
  std::string to_json() const override;
};

ClassifierPtr tree_train(const LabeledSet& data, int max_splits);

// Split budgets used by the comparison runs: coarse 3, medium 20, fine 100.
int tree_preset_splits(const std::string& name);

// ---- Gaussian discriminants ----

enum class DiscriminantMode { Linear, Quadratic };

class DiscriminantClassifier final : public Classifier {
 public:
  DiscriminantMode mode = DiscriminantMode::Linear;
  int dim = 0;
  Standardizer scaler;
  std::vector<double> log_priors;  // C
  std::vector<double> means;       // C x dim, standardized space
  std::vector<double> chol;        // (1 or C) x dim x dim lower Cholesky factors
  std::vector<double> log_dets;    // 1 or C

  std::string family() const override {
    return mode == DiscriminantMode::Linear ? "lda" : "qda";
  }
  int feature_dim() const override { return dim; }
  int predict(const float* v, int dim) const override;
  std::string to_json() const override;

  // Log posterior up to a shared constant; exposed for fixture tests.
  std::vector<double> scores(const float* v, int dim) const;
};

ClassifierPtr discriminant_train(const LabeledSet& data, DiscriminantMode mode);

// ---- Gaussian Naive Bayes ----

class GnbClassifier final : public Classifier {
 public:
  int dim = 0;
  std::vector<double> log_priors;  // C
  std::vector<double> means;       // C x dim, raw feature space
  std::vector<double> variances;   // C x dim, floored

  std::string family() const override { return "gnb"; }
  int feature_dim() const override { return dim; }
  int predict(const float* v, int dim) const override;
  std::string to_json() const override;

  std::vector<double> scores(const float* v, int dim) const;
};

ClassifierPtr gnb_train(const LabeledSet& data);

// ---- SVM (one-vs-one, SMO-trained) ----

enum class SvmKernel { Linear, Poly2, Poly3, Rbf };

const char* svm_kernel_name(SvmKernel k);
SvmKernel svm_kernel_from_name(const std::string& name);

struct SvmParams {
  SvmKernel kernel = SvmKernel::Rbf;
  double c = 1.0;
  double gamma = 0.0;  // <= 0 means 1/feature_dim
  double tol = 1e-3;
  int max_passes = 10000;
};

struct SvmBinary {
  int pos_class = 0;  // smaller class id, mapped to +1
  int neg_class = 1;
  double b = 0.0;
  bool converged = true;
  std::vector<double> coef;  // alpha_i * y_i per support vector
  FeatureMatrix sv;          // standardized support vectors
};

class SvmClassifier final : public Classifier {
 public:
  SvmParams params;  // gamma holds the resolved value
  Standardizer scaler;
  std::vector<SvmBinary> binaries;

  std::string family() const override { return "svm"; }
  int feature_dim() const override { return scaler.dim(); }
  int predict(const float* v, int dim) const override;
  std::string to_json() const override;

  bool converged() const;
  // Decision value of one pair on an already standardized vector.
  double decision(const SvmBinary& bin, const float* z) const;
};

ClassifierPtr svm_train(const LabeledSet& data, const SvmParams& params);

double svm_kernel_eval(SvmKernel kernel, double gamma, const float* a, const float* b, int dim);

// ---- serialization ----

// Dispatches on the "family" field written by to_json.
ClassifierPtr deserialize_classifier(const std::string& json_text);

// ---- declarative spec, used by training CLIs and comparison runs ----

// Text forms: "knn:k=1", "knn:k=10", "tree:coarse|medium|fine", "lda", "qda",
// "gnb", "svm:linear|quadratic|cubic|rbf". "svm:gaussian" is accepted as an
// alias for rbf.
struct ClassifierSpec {
  std::string algorithm;  // knn | tree | lda | qda | gnb | svm
  std::string variant;    // human-readable parameter tag, may be empty
  int knn_k = 1;
  int tree_splits = 20;
  SvmParams svm;

  std::string display() const { return variant.empty() ? algorithm : algorithm + ":" + variant; }
};

ClassifierSpec parse_classifier_spec(const std::string& text);
ClassifierPtr train_from_spec(const ClassifierSpec& spec, const LabeledSet& data);

}  // namespace hemocyte
