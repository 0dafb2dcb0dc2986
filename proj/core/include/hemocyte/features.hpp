#pragma once

#include <string>
#include <vector>

#include "hemocyte/image.hpp"

namespace hemocyte {

struct HogParams {
  int cell_size = 32;    // pixels per cell side
  int block_cells = 2;   // cells per block side
  int block_stride = 1;  // cells
  int bins = 9;
  bool signed_gradients = false;  // false = orientations folded to [0, 180)
};

struct FeatureVector {
  std::vector<double> values;
  std::string descriptor_id;
};

struct Corner {
  int x = 0;
  int y = 0;
  double response = 0.0;
};

/// Block-normalized orientation histograms over square cells.
/// Gradients are centered differences; RGB images use the channel with the
/// strongest gradient magnitude per pixel; votes are interpolated between the
/// two nearest orientation bins; each block is L2-normalized.
FeatureVector hog_descriptor(const Image& img, const HogParams& params);

/// Descriptor length for a given image size without computing anything.
std::size_t hog_descriptor_length(int width, int height, const HogParams& params);

/// Corner response R = det(M) - k * trace(M)^2 over a Gaussian-weighted
/// structure tensor, local maxima at or above threshold * max(R), strongest
/// first (ties in row-major order).
std::vector<Corner> harris_corners(const Image& img, double k = 0.04,
                                   int window = 3, double threshold = 0.01);

/// The raw response map, exposed for probing detector behaviour.
std::vector<double> harris_response(const Image& img, double k = 0.04,
                                    int window = 3);

/// Segment test on the 16-pixel Bresenham circle of radius 3: true when at
/// least `n` contiguous circle pixels are all brighter than I(p)+t or all
/// darker than I(p)-t. Pixels closer than 3 to a border are never corners.
bool fast_segment_test(const Image& gray, int x, int y, int t, int n);

/// FAST detections after 3x3 non-maximum suppression on the
/// sum-of-absolute-differences score.
std::vector<Corner> fast_corners(const Image& img, int t, int n = 9);

}  // namespace hemocyte
