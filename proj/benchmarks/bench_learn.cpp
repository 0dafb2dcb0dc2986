#include <benchmark/benchmark.h>

#include <random>

#include "hemocyte/classifiers.hpp"
#include "hemocyte/pca.hpp"

using namespace hemocyte;

namespace {

constexpr int kDim = 64;
constexpr int kPerClass = 100;
constexpr int kClasses = 4;

LabeledSet blobs(std::uint32_t seed, int per_class) {
  std::mt19937 rng(seed);
  std::normal_distribution<float> noise(0.0f, 1.0f);
  LabeledSet s;
  s.x = FeatureMatrix::make(per_class * kClasses, kDim);
  s.class_names = {"a", "b", "c", "d"};
  int row = 0;
  for (int c = 0; c < kClasses; ++c) {
    for (int i = 0; i < per_class; ++i, ++row) {
      float* v = s.x.row(row);
      for (int d = 0; d < kDim; ++d) v[d] = noise(rng) + (d % kClasses == c ? 6.0f : 0.0f);
      s.y.push_back(c);
    }
  }
  return s;
}

const LabeledSet& train_set() {
  static const LabeledSet s = blobs(1, kPerClass);
  return s;
}

const LabeledSet& probe_set() {
  static const LabeledSet s = blobs(2, 50);
  return s;
}

void predict_throughput(benchmark::State& state, const Classifier& model) {
  const LabeledSet& probes = probe_set();
  for (auto _ : state) {
    for (int r = 0; r < probes.x.rows; ++r) {
      int label = model.predict(probes.x.row(r), probes.x.cols);
      benchmark::DoNotOptimize(label);
    }
  }
  state.SetItemsProcessed(state.iterations() * probes.x.rows);
}

}  // namespace

static void BM_PcaFit(benchmark::State& state) {
  for (auto _ : state) {
    PcaModel model = pca_fit(train_set().x);
    benchmark::DoNotOptimize(model.components.data());
  }
}
BENCHMARK(BM_PcaFit);

static void BM_PcaProjectMatrix(benchmark::State& state) {
  static const PcaModel model = pca_fit(train_set().x);
  static const int k = select_k_for_variance(model, 0.95);
  for (auto _ : state) {
    FeatureMatrix z = pca_project_matrix(model, probe_set().x, k);
    benchmark::DoNotOptimize(z.data.data());
  }
}
BENCHMARK(BM_PcaProjectMatrix);

static void BM_TrainTreeMedium(benchmark::State& state) {
  for (auto _ : state) {
    ClassifierPtr model = tree_train(train_set(), 20);
    benchmark::DoNotOptimize(model.get());
  }
}
BENCHMARK(BM_TrainTreeMedium);

static void BM_TrainSvmRbf(benchmark::State& state) {
  SvmParams params;
  for (auto _ : state) {
    ClassifierPtr model = svm_train(train_set(), params);
    benchmark::DoNotOptimize(model.get());
  }
}
BENCHMARK(BM_TrainSvmRbf);

static void BM_PredictKnn(benchmark::State& state) {
  static const ClassifierPtr model = knn_train(train_set(), 1);
  predict_throughput(state, *model);
}
BENCHMARK(BM_PredictKnn);

static void BM_PredictTree(benchmark::State& state) {
  static const ClassifierPtr model = tree_train(train_set(), 20);
  predict_throughput(state, *model);
}
BENCHMARK(BM_PredictTree);

static void BM_PredictLda(benchmark::State& state) {
  static const ClassifierPtr model = discriminant_train(train_set(), DiscriminantMode::Linear);
  predict_throughput(state, *model);
}
BENCHMARK(BM_PredictLda);

static void BM_PredictGnb(benchmark::State& state) {
  static const ClassifierPtr model = gnb_train(train_set());
  predict_throughput(state, *model);
}
BENCHMARK(BM_PredictGnb);

static void BM_PredictSvmRbf(benchmark::State& state) {
  static const ClassifierPtr model = svm_train(train_set(), SvmParams{});
  predict_throughput(state, *model);
}
BENCHMARK(BM_PredictSvmRbf);

BENCHMARK_MAIN();
