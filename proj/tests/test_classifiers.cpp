#include <cmath>
#include <doctest.h>
#include <random>

#include "hemocyte/classifiers.hpp"
#include "hemocyte/error.hpp"
#include "hemocyte/smo.hpp"
#include "support/oracles.hpp"

using namespace hemocyte;

namespace {

LabeledSet make_blobs(std::mt19937& rng, const std::vector<std::vector<double>>& means, int per_class,
                      double sigma) {
  const int c = static_cast<int>(means.size());
  const int d = static_cast<int>(means[0].size());
  std::normal_distribution<double> g(0.0, sigma);
  LabeledSet s;
  s.x = FeatureMatrix::make(c * per_class, d);
  for (int ci = 0; ci < c; ++ci) {
    s.class_names.push_back("c" + std::to_string(ci));
    for (int i = 0; i < per_class; ++i) {
      const int row = ci * per_class + i;
      for (int j = 0; j < d; ++j)
        s.x.at(row, j) = static_cast<float>(means[ci][j] + g(rng));
      s.y.push_back(ci);
    }
  }
  return s;
}

LabeledSet xor_points() {
  LabeledSet s;
  s.x = FeatureMatrix::make(4, 2);
  const float pts[4][2] = {{0, 0}, {1, 1}, {0, 1}, {1, 0}};
  for (int i = 0; i < 4; ++i) {
    s.x.at(i, 0) = pts[i][0];
    s.x.at(i, 1) = pts[i][1];
    s.y.push_back(i < 2 ? 0 : 1);
  }
  s.class_names = {"off", "on"};
  return s;
}

double train_accuracy(const Classifier& m, const LabeledSet& s) {
  int hit = 0;
  for (int i = 0; i < s.x.rows; ++i)
    if (m.predict(s.x.row(i), s.x.cols) == s.y[i]) ++hit;
  return static_cast<double>(hit) / s.x.rows;
}

}  // namespace

TEST_CASE("labeled set validation") {
  LabeledSet s;
  s.x = FeatureMatrix::make(2, 2);
  s.y = {0, 1};
  s.class_names = {"a", "b"};
  CHECK_NOTHROW(validate_labeled_set(s));

  LabeledSet bad = s;
  bad.y = {0, 2};
  CHECK_THROWS_AS(validate_labeled_set(bad), Error);
  bad = s;
  bad.y = {0};
  CHECK_THROWS_AS(validate_labeled_set(bad), Error);
  bad = s;
  bad.x.at(0, 0) = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(validate_labeled_set(bad), Error);
  bad = s;
  bad.y = {0, 0};  // class b never appears
  CHECK_THROWS_AS(validate_labeled_set(bad), Error);
}

TEST_CASE("standardizer fits mean and deviation") {
  FeatureMatrix x = FeatureMatrix::make(4, 2);
  const float col0[4] = {2, 4, 6, 8};  // mean 5, population sd sqrt(5)
  for (int i = 0; i < 4; ++i) {
    x.at(i, 0) = col0[i];
    x.at(i, 1) = 7.0f;  // constant: sd floors, z-scores to zero
  }
  Standardizer sc = Standardizer::fit(x);
  CHECK(sc.mean[0] == doctest::Approx(5.0));
  CHECK(sc.mean[1] == doctest::Approx(7.0));
  CHECK(sc.stdev[0] == doctest::Approx(std::sqrt(5.0)));

  std::vector<float> z = sc.apply_vec(x.row(0), 2);
  CHECK(z[0] == doctest::Approx(-3.0 / std::sqrt(5.0)));
  CHECK(z[1] == 0.0f);
}

// ---- knn ----

TEST_CASE("knn agrees with the linear-scan oracle") {
  std::mt19937 rng(31);
  std::normal_distribution<double> g(0.0, 1.0);
  LabeledSet s = make_blobs(rng, {{0, 0, 0}, {2, 1, 0}, {-1, 2, 1}}, 40, 1.5);
  for (int k : {1, 3, 10}) {
    ClassifierPtr m = knn_train(s, k);
    const auto* knn = dynamic_cast<const KnnClassifier*>(m.get());
    REQUIRE(knn != nullptr);
    for (int q = 0; q < 60; ++q) {
      std::vector<float> raw(3);
      for (float& v : raw) v = static_cast<float>(g(rng) * 2.0);
      std::vector<float> z = knn->scaler.apply_vec(raw.data(), 3);
      const int want = oracle::knn_linear_scan(knn->exemplars, knn->labels, 3, z.data(), k);
      REQUIRE(m->predict(raw.data(), 3) == want);
    }
  }
}

TEST_CASE("knn distance ties pick the lower exemplar index") {
  LabeledSet s;
  s.x = FeatureMatrix::make(3, 1);
  s.x.at(0, 0) = 5.0f;  // class 1, index 0
  s.x.at(1, 0) = 5.0f;  // class 0, same point, index 1
  s.x.at(2, 0) = 0.0f;
  s.y = {1, 0, 0};
  s.class_names = {"a", "b"};
  ClassifierPtr m = knn_train(s, 1);
  std::vector<float> q{5.0f};
  CHECK(m->predict(q.data(), 1) == 1);
}

TEST_CASE("knn vote ties pick the smallest class id") {
  LabeledSet s;
  s.x = FeatureMatrix::make(4, 1);
  s.x.at(0, 0) = -4.0f;
  s.x.at(1, 0) = 4.0f;
  s.x.at(2, 0) = -9.0f;
  s.x.at(3, 0) = 9.0f;
  s.y = {1, 0, 1, 0};  // symmetric around zero
  s.class_names = {"a", "b"};
  ClassifierPtr m = knn_train(s, 2);
  std::vector<float> q{0.0f};
  CHECK(m->predict(q.data(), 1) == 0);
}

TEST_CASE("knn is invariant to per-feature affine rescaling") {
  std::mt19937 rng(37);
  LabeledSet s = make_blobs(rng, {{0, 0}, {3, 1}}, 25, 1.0);
  LabeledSet scaled = s;
  for (int i = 0; i < scaled.x.rows; ++i) {
    scaled.x.at(i, 0) = scaled.x.at(i, 0) * 100.0f + 7.0f;
    scaled.x.at(i, 1) = scaled.x.at(i, 1) * 0.01f - 3.0f;
  }
  ClassifierPtr a = knn_train(s, 3);
  ClassifierPtr b = knn_train(scaled, 3);
  std::normal_distribution<double> g(0.0, 2.0);
  for (int q = 0; q < 50; ++q) {
    float raw[2] = {static_cast<float>(g(rng)), static_cast<float>(g(rng))};
    float mapped[2] = {raw[0] * 100.0f + 7.0f, raw[1] * 0.01f - 3.0f};
    REQUIRE(a->predict(raw, 2) == b->predict(mapped, 2));
  }
}

TEST_CASE("knn validates k") {
  std::mt19937 rng(41);
  LabeledSet s = make_blobs(rng, {{0}, {5}}, 4, 0.5);
  CHECK_THROWS_AS(knn_train(s, 0), Error);
  CHECK_THROWS_AS(knn_train(s, 9), Error);
  CHECK_NOTHROW(knn_train(s, 8));
}

// ---- tree ----

TEST_CASE("tree solves xor with three splits") {
  LabeledSet s = xor_points();
  ClassifierPtr m = tree_train(s, 3);
  CHECK(train_accuracy(*m, s) == 1.0);
  const auto* tree = dynamic_cast<const TreeClassifier*>(m.get());
  REQUIRE(tree != nullptr);
  // the root split has zero gini gain; growth must not stall on it
  REQUIRE(tree->impurity_trace.size() >= 2);
  for (size_t i = 1; i < tree->impurity_trace.size(); ++i)
    REQUIRE(tree->impurity_trace[i] <= tree->impurity_trace[i - 1] + 1e-12);
  CHECK(tree->impurity_trace.back() == doctest::Approx(0.0));
}

TEST_CASE("tree stump splits at the midpoint and sends <= left") {
  LabeledSet s;
  s.x = FeatureMatrix::make(2, 1);
  s.x.at(0, 0) = 0.0f;
  s.x.at(1, 0) = 10.0f;
  s.y = {0, 1};
  s.class_names = {"lo", "hi"};
  ClassifierPtr m = tree_train(s, 1);
  const auto* tree = dynamic_cast<const TreeClassifier*>(m.get());
  REQUIRE(tree->nodes.size() == 3);
  CHECK(tree->nodes[0].feature == 0);
  CHECK(tree->nodes[0].threshold == 5.0f);
  float v = 5.0f;
  CHECK(m->predict(&v, 1) == 0);
  v = 5.0001f;
  CHECK(m->predict(&v, 1) == 1);
}

TEST_CASE("deeper trees never lose training accuracy") {
  std::mt19937 rng(43);
  LabeledSet s = make_blobs(rng, {{0, 0}, {1.5, 0.5}, {0.5, 1.5}, {2, 2}}, 50, 0.9);
  ClassifierPtr coarse = tree_train(s, tree_preset_splits("coarse"));
  ClassifierPtr medium = tree_train(s, tree_preset_splits("medium"));
  ClassifierPtr fine = tree_train(s, tree_preset_splits("fine"));
  const double a = train_accuracy(*coarse, s);
  const double b = train_accuracy(*medium, s);
  const double c = train_accuracy(*fine, s);
  CHECK(a <= b);
  CHECK(b <= c);
  CHECK(c > a);  // the overlap makes more splits genuinely help here
}

TEST_CASE("tree presets and degenerate cases") {
  CHECK(tree_preset_splits("coarse") == 3);
  CHECK(tree_preset_splits("medium") == 20);
  CHECK(tree_preset_splits("fine") == 100);
  CHECK_THROWS_AS(tree_preset_splits("huge"), Error);

  LabeledSet pure;
  pure.x = FeatureMatrix::make(3, 2);
  pure.y = {0, 0, 0};
  pure.class_names = {"only"};
  ClassifierPtr m = tree_train(pure, 10);
  const auto* tree = dynamic_cast<const TreeClassifier*>(m.get());
  CHECK(tree->nodes.size() == 1);  // one pure leaf, nothing to split
  float v[2] = {9, 9};
  CHECK(m->predict(v, 2) == 0);

  std::mt19937 rng(47);
  LabeledSet s = make_blobs(rng, {{0}, {4}}, 10, 0.5);
  CHECK_THROWS_AS(tree_train(s, 0), Error);
  CHECK_THROWS_AS(tree_train(s, -1), Error);
}

// ---- discriminants ----

TEST_CASE("lda and qda separate distant gaussians") {
  std::mt19937 rng(53);
  LabeledSet train = make_blobs(rng, {{0, 0, 0, 0}, {10, 0, 0, 0}, {0, 10, 0, 0}}, 50, 1.0);
  LabeledSet test = make_blobs(rng, {{0, 0, 0, 0}, {10, 0, 0, 0}, {0, 10, 0, 0}}, 100, 1.0);
  for (DiscriminantMode mode : {DiscriminantMode::Linear, DiscriminantMode::Quadratic}) {
    ClassifierPtr m = discriminant_train(train, mode);
    CHECK(train_accuracy(*m, test) >= 0.99);
  }
}

TEST_CASE("qda handles concentric classes, lda cannot") {
  std::mt19937 rng(59);
  std::normal_distribution<double> inner(0.0, 1.0), outer(0.0, 3.0);
  auto draw = [&](int per_class) {
    LabeledSet s;
    s.x = FeatureMatrix::make(per_class * 2, 4);
    s.class_names = {"tight", "wide"};
    for (int i = 0; i < per_class * 2; ++i) {
      const bool wide = i >= per_class;
      for (int j = 0; j < 4; ++j)
        s.x.at(i, j) = static_cast<float>(wide ? outer(rng) : inner(rng));
      s.y.push_back(wide ? 1 : 0);
    }
    return s;
  };
  LabeledSet train = draw(200), test = draw(200);
  ClassifierPtr qda = discriminant_train(train, DiscriminantMode::Quadratic);
  ClassifierPtr lda = discriminant_train(train, DiscriminantMode::Linear);
  CHECK(train_accuracy(*qda, test) >= 0.80);
  CHECK(train_accuracy(*lda, test) <= 0.60);
}

TEST_CASE("lda boundary sits between symmetric classes") {
  LabeledSet s;
  s.x = FeatureMatrix::make(4, 1);
  s.x.at(0, 0) = -3.0f;
  s.x.at(1, 0) = -1.0f;
  s.x.at(2, 0) = 1.0f;
  s.x.at(3, 0) = 3.0f;
  s.y = {0, 0, 1, 1};
  s.class_names = {"neg", "pos"};
  ClassifierPtr m = discriminant_train(s, DiscriminantMode::Linear);
  float v = -0.2f;
  CHECK(m->predict(&v, 1) == 0);
  v = 0.2f;
  CHECK(m->predict(&v, 1) == 1);
  const auto* d = dynamic_cast<const DiscriminantClassifier*>(m.get());
  float q = 1.0f;
  auto sc = d->scores(&q, 1);
  REQUIRE(sc.size() == 2);
  CHECK(sc[1] > sc[0]);
}

TEST_CASE("discriminants enforce their data preconditions") {
  LabeledSet tiny;
  tiny.x = FeatureMatrix::make(2, 2);
  tiny.y = {0, 1};
  tiny.class_names = {"a", "b"};
  try {
    discriminant_train(tiny, DiscriminantMode::Linear);  // needs N >= C + 1
    FAIL("expected InsufficientData");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientData);
  }

  LabeledSet lone;
  lone.x = FeatureMatrix::make(4, 1);
  lone.x.at(0, 0) = 0;
  lone.x.at(1, 0) = 1;
  lone.x.at(2, 0) = 2;
  lone.x.at(3, 0) = 9;
  lone.y = {0, 0, 0, 1};  // class b has a single sample: no covariance
  lone.class_names = {"a", "b"};
  try {
    discriminant_train(lone, DiscriminantMode::Quadratic);
    FAIL("expected InsufficientClassData");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientClassData);
  }
  // pooled covariance still works with the lone sample
  CHECK_NOTHROW(discriminant_train(lone, DiscriminantMode::Linear));
}

TEST_CASE("discriminants survive constant features via regularization") {
  std::mt19937 rng(61);
  LabeledSet s = make_blobs(rng, {{0, 0}, {5, 0}}, 20, 1.0);
  for (int i = 0; i < s.x.rows; ++i) s.x.at(i, 1) = 2.5f;  // zero variance dimension
  CHECK_NOTHROW(discriminant_train(s, DiscriminantMode::Linear));
  CHECK_NOTHROW(discriminant_train(s, DiscriminantMode::Quadratic));
  ClassifierPtr m = discriminant_train(s, DiscriminantMode::Quadratic);
  float v[2] = {5.0f, 2.5f};
  CHECK(m->predict(v, 2) == 1);
}

// ---- naive bayes ----

TEST_CASE("gnb matches the closed-form posterior") {
  LabeledSet s;
  s.x = FeatureMatrix::make(4, 1);
  s.x.at(0, 0) = 0.0f;
  s.x.at(1, 0) = 2.0f;  // class 0: mean 1, mle variance 1
  s.x.at(2, 0) = 4.0f;
  s.x.at(3, 0) = 6.0f;  // class 1: mean 5, mle variance 1
  s.y = {0, 0, 1, 1};
  s.class_names = {"lo", "hi"};
  ClassifierPtr m = gnb_train(s);
  const auto* g = dynamic_cast<const GnbClassifier*>(m.get());
  REQUIRE(g != nullptr);
  CHECK(g->means[0] == doctest::Approx(1.0));
  CHECK(g->means[1] == doctest::Approx(5.0));
  CHECK(g->variances[0] == doctest::Approx(1.0));

  // score difference is (12 - 4x) / 2 + 0: crossover at exactly x = 3
  float v = 2.9f;
  CHECK(m->predict(&v, 1) == 0);
  v = 3.1f;
  CHECK(m->predict(&v, 1) == 1);
  v = 3.0f;
  CHECK(m->predict(&v, 1) == 0);  // exact tie goes to the smaller class

  v = 2.0f;
  auto sc = g->scores(&v, 1);
  const double want0 = std::log(0.5) - 0.5 * std::log(2.0 * 3.14159265358979323846) - 0.5;
  CHECK(sc[0] == doctest::Approx(want0).epsilon(1e-9));
}

TEST_CASE("gnb weights classes by their priors") {
  // same likelihood both sides, 3:1 prior pulls the call
  LabeledSet s;
  s.x = FeatureMatrix::make(8, 1);
  const float vals[8] = {-1, 1, -1, 1, -1, 1, -2, 2};
  const int labs[8] = {0, 0, 0, 0, 0, 0, 1, 1};
  for (int i = 0; i < 8; ++i) {
    s.x.at(i, 0) = vals[i];
    s.y.push_back(labs[i]);
  }
  s.class_names = {"common", "rare"};
  ClassifierPtr m = gnb_train(s);
  float v = 0.0f;
  CHECK(m->predict(&v, 1) == 0);
}

TEST_CASE("gnb floors zero variances") {
  LabeledSet s;
  s.x = FeatureMatrix::make(4, 2);
  for (int i = 0; i < 4; ++i) {
    s.x.at(i, 0) = i < 2 ? 1.0f : 4.0f;
    s.x.at(i, 1) = 7.0f;  // constant everywhere: the floor keeps scores finite
  }
  s.y = {0, 0, 1, 1};
  s.class_names = {"a", "b"};
  ClassifierPtr m = gnb_train(s);
  float v[2] = {1.0f, 7.0f};
  CHECK(m->predict(v, 2) == 0);
  const auto* g = dynamic_cast<const GnbClassifier*>(m.get());
  for (double var : g->variances) REQUIRE(var > 0.0);
  auto sc = g->scores(v, 2);
  REQUIRE(std::isfinite(sc[0]));
  REQUIRE(std::isfinite(sc[1]));
}

TEST_CASE("gnb needs one sample per class") {
  LabeledSet s;
  s.x = FeatureMatrix::make(2, 1);
  s.x.at(0, 0) = 0;
  s.x.at(1, 0) = 1;
  s.y = {0, 0};
  s.class_names = {"a", "b"};
  CHECK_THROWS_AS(gnb_train(s), Error);
}

// ---- svm and smo ----

TEST_CASE("smo recovers the analytic four-point solution") {
  FeatureMatrix x = FeatureMatrix::make(4, 2);
  const float pts[4][2] = {{1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
  for (int i = 0; i < 4; ++i) {
    x.at(i, 0) = pts[i][0];
    x.at(i, 1) = pts[i][1];
  }
  const std::vector<int> y = {1, 1, -1, -1};
  SmoResult r = smo_train(x, y, SvmKernel::Linear, 1.0, 0.0, 1e-3, 10000);
  REQUIRE(r.converged);

  // unique primal: w = (1, 0), b = 0, margin 2; alphas may slide along the
  // degenerate face but the pair sums are pinned at 1/2
  double wx = 0, wy = 0, asum = 0;
  for (int i = 0; i < 4; ++i) {
    REQUIRE(r.alpha[i] >= -1e-9);
    REQUIRE(r.alpha[i] <= 1.0 + 1e-9);
    wx += r.alpha[i] * y[i] * pts[i][0];
    wy += r.alpha[i] * y[i] * pts[i][1];
    asum += r.alpha[i] * y[i];
  }
  CHECK(std::abs(asum) < 1e-9);
  CHECK(wx == doctest::Approx(1.0).epsilon(2e-3));
  CHECK(wy == doctest::Approx(0.0).epsilon(2e-3));
  CHECK(std::abs(r.b) < 2e-3);

  // dual objective equals 1/2 and no grid point beats it
  auto dual = [&](const std::vector<double>& a) {
    double obj = 0.0;
    for (int i = 0; i < 4; ++i) obj += a[i];
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        double k = pts[i][0] * pts[j][0] + pts[i][1] * pts[j][1];
        obj -= 0.5 * a[i] * a[j] * y[i] * y[j] * k;
      }
    return obj;
  };
  CHECK(dual(r.alpha) == doctest::Approx(0.5).epsilon(1e-5));
  double best = -1.0;
  for (double a1 = 0; a1 <= 1.0; a1 += 0.05)
    for (double a2 = 0; a2 <= 1.0; a2 += 0.05)
      for (double a3 = 0; a3 <= 1.0; a3 += 0.05) {
        const double a4 = a1 + a2 - a3;
        if (a4 < 0.0 || a4 > 1.0) continue;
        best = std::max(best, dual({a1, a2, a3, a4}));
      }
  CHECK(dual(r.alpha) >= best - 1e-6);
}

TEST_CASE("smo is antisymmetric under label flips") {
  std::mt19937 rng(67);
  std::normal_distribution<double> g(0.0, 1.0);
  FeatureMatrix x = FeatureMatrix::make(30, 3);
  std::vector<int> y(30);
  for (int i = 0; i < 30; ++i) {
    const int cls = i % 2 ? 1 : -1;
    for (int j = 0; j < 3; ++j) x.at(i, j) = static_cast<float>(g(rng) + cls);
    y[i] = cls;
  }
  std::vector<int> flipped(30);
  for (int i = 0; i < 30; ++i) flipped[i] = -y[i];

  for (SvmKernel k : {SvmKernel::Linear, SvmKernel::Poly2, SvmKernel::Poly3, SvmKernel::Rbf}) {
    SmoResult a = smo_train(x, y, k, 1.0, 1.0 / 3.0, 1e-3, 10000);
    SmoResult b = smo_train(x, flipped, k, 1.0, 1.0 / 3.0, 1e-3, 10000);
    REQUIRE(a.alpha == b.alpha);
    REQUIRE(a.b == -b.b);
    REQUIRE(a.converged == b.converged);
  }
}

TEST_CASE("smo validates its inputs") {
  FeatureMatrix x = FeatureMatrix::make(4, 1);
  std::vector<int> y = {1, 1, -1, -1};
  CHECK_THROWS_AS(smo_train(x, {1, 1, 1, 1}, SvmKernel::Linear, 1.0, 0.0, 1e-3, 100), Error);
  CHECK_THROWS_AS(smo_train(x, {1, 0, -1, -1}, SvmKernel::Linear, 1.0, 0.0, 1e-3, 100), Error);
  CHECK_THROWS_AS(smo_train(x, y, SvmKernel::Linear, 0.0, 0.0, 1e-3, 100), Error);
  CHECK_THROWS_AS(smo_train(x, y, SvmKernel::Rbf, 1.0, 0.0, 1e-3, 100), Error);
  CHECK_THROWS_AS(smo_train(x, y, SvmKernel::Linear, 1.0, 0.0, 1e-3, 0), Error);
}

TEST_CASE("kernel evaluations match hand formulas") {
  const float a[2] = {1.0f, 2.0f};
  const float b[2] = {3.0f, -1.0f};
  const double dot = 1.0 * 3.0 + 2.0 * -1.0;  // 1
  CHECK(svm_kernel_eval(SvmKernel::Linear, 0.5, a, b, 2) == doctest::Approx(1.0));
  CHECK(svm_kernel_eval(SvmKernel::Poly2, 0.5, a, b, 2) == doctest::Approx((dot + 1) * (dot + 1)));
  CHECK(svm_kernel_eval(SvmKernel::Poly3, 0.5, a, b, 2) ==
        doctest::Approx((dot + 1) * (dot + 1) * (dot + 1)));
  const double d2 = 4.0 + 9.0;
  CHECK(svm_kernel_eval(SvmKernel::Rbf, 0.5, a, b, 2) == doctest::Approx(std::exp(-0.5 * d2)));

  CHECK(svm_kernel_from_name("gaussian") == SvmKernel::Rbf);
  CHECK(svm_kernel_from_name("quadratic") == SvmKernel::Poly2);
  CHECK(svm_kernel_from_name("cubic") == SvmKernel::Poly3);
  CHECK(svm_kernel_from_name("linear") == SvmKernel::Linear);
  CHECK_THROWS_AS(svm_kernel_from_name("sigmoid"), Error);
}

TEST_CASE("svm rbf nails xor") {
  LabeledSet s = xor_points();
  SvmParams p;
  p.kernel = SvmKernel::Rbf;
  ClassifierPtr m = svm_train(s, p);
  CHECK(train_accuracy(*m, s) == 1.0);
  const auto* svm = dynamic_cast<const SvmClassifier*>(m.get());
  CHECK(svm->converged());
  CHECK(svm->params.gamma == doctest::Approx(0.5));  // resolved 1/d
}

TEST_CASE("svm one-vs-one separates three blobs with every kernel") {
  std::mt19937 rng(71);
  LabeledSet s = make_blobs(rng, {{0, 0}, {6, 0}, {0, 6}}, 20, 0.7);
  for (SvmKernel k : {SvmKernel::Linear, SvmKernel::Poly2, SvmKernel::Poly3, SvmKernel::Rbf}) {
    SvmParams p;
    p.kernel = k;
    ClassifierPtr m = svm_train(s, p);
    CHECK(train_accuracy(*m, s) == 1.0);
    const auto* svm = dynamic_cast<const SvmClassifier*>(m.get());
    REQUIRE(svm->binaries.size() == 3);
    CHECK(svm->binaries[0].pos_class == 0);
    CHECK(svm->binaries[0].neg_class == 1);
  }
}

TEST_CASE("a zero decision votes for the smaller class") {
  SvmClassifier svm;
  svm.class_names = {"a", "b"};
  svm.params.kernel = SvmKernel::Linear;
  svm.scaler.mean = {0.0};
  svm.scaler.stdev = {1.0};
  SvmBinary bin;
  bin.pos_class = 0;
  bin.neg_class = 1;
  bin.b = 0.0;
  bin.sv = FeatureMatrix::make(2, 1);
  bin.sv.at(0, 0) = 1.0f;
  bin.sv.at(1, 0) = 1.0f;
  bin.coef = {1.0, -1.0};  // cancels exactly: decision is identically zero
  svm.binaries.push_back(bin);
  float v = 3.0f;
  CHECK(svm.decision(svm.binaries[0], &v) == 0.0);
  CHECK(svm.predict(&v, 1) == 0);
}

// ---- serialization ----

TEST_CASE("every family round-trips with bit-identical predictions") {
  std::mt19937 rng(73);
  LabeledSet s = make_blobs(rng, {{0, 0, 0}, {4, 1, 0}, {1, 4, 2}}, 15, 1.0);

  std::vector<ClassifierPtr> models;
  models.push_back(knn_train(s, 3));
  models.push_back(tree_train(s, 10));
  models.push_back(discriminant_train(s, DiscriminantMode::Linear));
  models.push_back(discriminant_train(s, DiscriminantMode::Quadratic));
  models.push_back(gnb_train(s));
  for (SvmKernel k : {SvmKernel::Linear, SvmKernel::Poly2, SvmKernel::Poly3, SvmKernel::Rbf}) {
    SvmParams p;
    p.kernel = k;
    models.push_back(svm_train(s, p));
  }

  std::normal_distribution<double> g(0.0, 3.0);
  FeatureMatrix probes = FeatureMatrix::make(1000, 3);
  for (float& v : probes.data) v = static_cast<float>(g(rng));

  for (const ClassifierPtr& m : models) {
    const std::string fam = m->family();
    CAPTURE(fam);
    ClassifierPtr back = deserialize_classifier(m->to_json());
    REQUIRE(back->family() == m->family());
    REQUIRE(back->class_names == m->class_names);
    REQUIRE(back->feature_dim() == m->feature_dim());
    std::vector<int> a = m->predict_batch(probes);
    std::vector<int> b = back->predict_batch(probes);
    REQUIRE(a == b);
  }
  CHECK_THROWS_AS(deserialize_classifier("{\"family\":\"mlp\"}"), Error);
  CHECK_THROWS_AS(deserialize_classifier("not json"), Error);
}

TEST_CASE("predict_batch equals row-wise predict") {
  std::mt19937 rng(79);
  LabeledSet s = make_blobs(rng, {{0}, {3}}, 12, 0.6);
  ClassifierPtr m = gnb_train(s);
  std::vector<int> batch = m->predict_batch(s.x);
  for (int i = 0; i < s.x.rows; ++i) REQUIRE(batch[i] == m->predict(s.x.row(i), 1));
}

// ---- spec grammar ----

TEST_CASE("classifier specs parse to the documented shapes") {
  ClassifierSpec k1 = parse_classifier_spec("knn:k=1");
  CHECK(k1.algorithm == "knn");
  CHECK(k1.knn_k == 1);
  CHECK(k1.display() == "knn:k=1");
  CHECK(parse_classifier_spec("knn:k=10").knn_k == 10);
  CHECK(parse_classifier_spec("knn").knn_k == 1);

  CHECK(parse_classifier_spec("tree:coarse").tree_splits == 3);
  CHECK(parse_classifier_spec("tree:medium").tree_splits == 20);
  CHECK(parse_classifier_spec("tree:fine").tree_splits == 100);
  CHECK(parse_classifier_spec("tree:7").tree_splits == 7);
  CHECK(parse_classifier_spec("tree:fine").display() == "tree:fine");

  CHECK(parse_classifier_spec("lda").algorithm == "lda");
  CHECK(parse_classifier_spec("qda").algorithm == "qda");
  CHECK(parse_classifier_spec("gnb").variant.empty());

  ClassifierSpec svm = parse_classifier_spec("svm:rbf,c=2.5,gamma=0.1");
  CHECK(svm.svm.kernel == SvmKernel::Rbf);
  CHECK(svm.svm.c == 2.5);
  CHECK(svm.svm.gamma == 0.1);
  CHECK(svm.display() == "svm:rbf");
  CHECK(parse_classifier_spec("svm:gaussian").svm.kernel == SvmKernel::Rbf);
  CHECK(parse_classifier_spec("svm:gaussian").variant == "rbf");
  CHECK(parse_classifier_spec("svm:quadratic").svm.kernel == SvmKernel::Poly2);

  CHECK_THROWS_AS(parse_classifier_spec("forest"), Error);
  CHECK_THROWS_AS(parse_classifier_spec("tree"), Error);
  CHECK_THROWS_AS(parse_classifier_spec("knn:k=x"), Error);
  CHECK_THROWS_AS(parse_classifier_spec("svm"), Error);
  CHECK_THROWS_AS(parse_classifier_spec("svm:rbf,depth=3"), Error);
  CHECK_THROWS_AS(parse_classifier_spec("lda:shrink"), Error);
}

TEST_CASE("train_from_spec dispatches to the right family") {
  std::mt19937 rng(83);
  LabeledSet s = make_blobs(rng, {{0, 0}, {5, 5}}, 10, 0.5);
  CHECK(train_from_spec(parse_classifier_spec("knn:k=1"), s)->family() == "knn");
  CHECK(train_from_spec(parse_classifier_spec("tree:coarse"), s)->family() == "tree");
  CHECK(train_from_spec(parse_classifier_spec("lda"), s)->family() == "lda");
  CHECK(train_from_spec(parse_classifier_spec("qda"), s)->family() == "qda");
  CHECK(train_from_spec(parse_classifier_spec("gnb"), s)->family() == "gnb");
  CHECK(train_from_spec(parse_classifier_spec("svm:linear"), s)->family() == "svm");
}
