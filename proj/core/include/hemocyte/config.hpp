#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hemocyte/features.hpp"
#include "hemocyte/segment.hpp"

namespace hemocyte {

struct PcaConfig {
  bool enabled = true;
  double variance_fraction = 0.95;
};

// Declarative form of the whole pipeline. The defaults reproduce the
// reference setup: RGB thresholding, dilation radius 3, 128x128 crops,
// HOG with 32-pixel cells, PCA keeping 95% variance, 1-NN.
struct RunConfig {
  std::string dataset_root;
  ThresholdSpec threshold = default_rgb_threshold();
  int dilation_radius = 3;
  int normalized_size = 128;
  HogParams hog;
  PcaConfig pca;
  std::vector<std::string> classifiers = {"knn:k=1"};
  std::uint64_t seed = 42;
  std::string output_dir = "out";
  int jobs = 0;  // 0 = all available cores

  SegmentParams segment_params() const {
    SegmentParams p;
    p.threshold = threshold;
    p.dilation_radius = dilation_radius;
    p.out_size = normalized_size;
    return p;
  }
};

RunConfig default_config();

// Throws a config error when ranges are violated (variance fraction outside
// (0,1], normalized size < 8, negative radius, bad HOG geometry, unparsable
// classifier specs).
void validate_config(const RunConfig& cfg);

std::string config_to_json(const RunConfig& cfg);
RunConfig config_from_json(const std::string& text);

// Reads a config file; the literal name "default" yields default_config().
RunConfig load_config(const std::string& path_or_default);

// Hash over every field (used in manifests and report caching).
std::string config_fingerprint(const RunConfig& cfg);

// Hash over the fields that affect per-image features only (segmentation +
// HOG), used to key the on-disk feature cache.
std::string pipeline_fingerprint(const RunConfig& cfg);

}  // namespace hemocyte
