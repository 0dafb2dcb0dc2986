#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hemocyte/classifiers.hpp"
#include "hemocyte/config.hpp"
#include "hemocyte/segment.hpp"

namespace hemocyte {

// Canonical class order; labels index into this everywhere.
const std::vector<std::string>& canonical_class_names();

enum class Split { Train, Test };

struct DatasetSample {
  std::string path;
  int label = 0;
  Split split = Split::Train;
};

struct Dataset {
  std::vector<DatasetSample> samples;
  std::vector<std::string> class_names;
  int skipped = 0;  // non-image or unreadable files dropped during the scan

  int count(Split s) const;
  int count_class(int label) const;
};

// Scans root/{EOSINOPHIL,...}/* or root/{TRAIN,TEST}/{EOSINOPHIL,...}/*.
// Directory matching is case-insensitive. Without TRAIN/TEST directories a
// deterministic stratified 80/20 split is drawn: per class, paths are sorted
// lexicographically, shuffled by Fisher-Yates on mt19937_64(seed + label),
// and round(0.2 n) of them (clamped to [1, n-1]) become test samples.
Dataset ingest_dataset(const std::string& root, std::uint64_t seed = 42);

// Deterministic stratified subset (per-class shuffle with the same scheme,
// first per_class paths kept), re-split 80/20 with the same seed.
Dataset subset_per_class(const Dataset& full, int per_class, std::uint64_t seed);

struct ConfusionMatrix {
  int num_classes = 0;
  std::vector<long long> counts;  // row-major, rows = true class

  static ConfusionMatrix make(int c) {
    return ConfusionMatrix{c, std::vector<long long>(static_cast<size_t>(c) * c, 0)};
  }
  void add(int truth, int predicted) { ++counts[static_cast<size_t>(truth) * num_classes + predicted]; }
  long long at(int truth, int predicted) const {
    return counts[static_cast<size_t>(truth) * num_classes + predicted];
  }
  long long total() const;
  long long trace() const;
  double accuracy() const;
  std::vector<double> precision() const;  // per class, 0 when never predicted
  std::vector<double> recall() const;     // per class, 0 when absent from truth
};

struct EvaluationReport {
  std::string algorithm;
  std::string variant;
  bool pca = false;
  ConfusionMatrix confusion;
  double accuracy = 0.0;
  std::vector<double> precision;
  std::vector<double> recall;
  double train_seconds = 0.0;
  double predict_obs_per_sec = 0.0;
  std::string fingerprint;
  std::string error;  // non-empty when this spec failed; other fields are zero
};

// Runs the model over the test set, timing prediction only.
EvaluationReport evaluate(const Classifier& model, const LabeledSet& test, double train_seconds,
                          const std::string& fingerprint);

// |a AND b| / |a OR b|; 1.0 when both masks are empty.
double mask_iou(const BinaryMask& a, const BinaryMask& b);

// ---- feature extraction over a dataset ----

struct ExtractionResult {
  LabeledSet train;
  LabeledSet test;
  std::vector<std::string> train_paths;  // aligned with train rows
  std::vector<std::string> test_paths;
  std::vector<std::string> failures;  // "path: reason", order follows the dataset
  int cache_hits = 0;
  int cache_misses = 0;
};

// Segment + HOG for every sample, in parallel (cfg.jobs), with an on-disk
// cache keyed by (content hash, pipeline fingerprint). cache_dir may be empty
// to disable caching. Failed images are recorded and dropped.
ExtractionResult extract_features(const Dataset& data, const RunConfig& cfg,
                                  const std::string& cache_dir);

// ---- comparison runs ----

struct ComparisonOutput {
  std::vector<EvaluationReport> reports;
  std::vector<std::string> artifacts;  // files written under cfg.output_dir
  bool from_cache = false;             // reports were replayed from the memo
};

// One report per (classifier spec, pca off/on), in config order, off before
// on. Failures are recorded in the report's error field without aborting the
// sweep. Writes reports.csv, reports.json, and one confusion CSV per report
// into cfg.output_dir, and memoizes finished reports keyed by (config,
// dataset) so a re-run with identical inputs rewrites identical bytes.
ComparisonOutput run_comparison(const Dataset& data, const RunConfig& cfg);

std::string reports_to_csv(const std::vector<EvaluationReport>& reports);
std::string confusion_to_csv(const ConfusionMatrix& m, const std::vector<std::string>& names);
std::string reports_to_json(const std::vector<EvaluationReport>& reports);

// ---- detection-annotation ground truth for IoU checks ----

struct AnnotatedSample {
  std::string image_path;
  int xmin = 0, ymin = 0, xmax = 0, ymax = 0;  // inclusive pixel box of the WBC
};

// Pairs every .xml in dir with its image; the XML is the usual detection
// annotation layout (object/name + bndbox). Only objects named WBC count;
// files without a WBC box are skipped.
std::vector<AnnotatedSample> load_annotations(const std::string& dir);

// Mean IoU of the predicted hull mask against the box mask over the first
// `limit` annotated images (0 = all); failures score 0.
double mean_hull_iou(const std::vector<AnnotatedSample>& samples, const RunConfig& cfg, int limit = 0);

}  // namespace hemocyte
