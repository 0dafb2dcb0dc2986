#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hemocyte/image.hpp"

namespace hemocyte {

struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;  // row-major 0/1

  static BinaryMask make(int width, int height) {
    return BinaryMask{width, height,
                      std::vector<std::uint8_t>(static_cast<size_t>(width) * height, 0)};
  }
  bool get(int x, int y) const { return bits[static_cast<size_t>(y) * width + x] != 0; }
  void set(int x, int y, bool v = true) {
    bits[static_cast<size_t>(y) * width + x] = v ? 1 : 0;
  }
  std::size_t count() const;
};

struct LabelMap {
  int width = 0;
  int height = 0;
  std::vector<std::int32_t> labels;  // 0 = background, components are 1..num_components
  int num_components = 0;

  std::int32_t label(int x, int y) const {
    return labels[static_cast<size_t>(y) * width + x];
  }
};

struct Region {
  int label = 0;
  long long area = 0;
  int min_x = 0, min_y = 0, max_x = 0, max_y = 0;
  double centroid_x = 0.0, centroid_y = 0.0;
};

/// Inclusive per-channel range in the units of `space` (degrees/fractions for
/// HSV, floats for LAB, [0,255] otherwise).
struct ThresholdSpec {
  ColorSpace space = ColorSpace::Rgb;
  std::array<double, 3> lo{0.0, 0.0, 0.0};
  std::array<double, 3> hi{255.0, 255.0, 255.0};
};

/// RGB working point used throughout: R 0-205, G 0-190, B 195-255.
ThresholdSpec default_rgb_threshold();

// Tuned WBC extraction ranges for each supported space (same ranges the
// default RGB spec comes from). Gray is not supported.
ThresholdSpec preset_threshold(ColorSpace space);

/// Mask bit set iff every channel sample lies in [lo, hi].
BinaryMask threshold_color(const Image& img, const ThresholdSpec& spec);

/// Morphological dilation by the Euclidean disk {dx^2 + dy^2 <= r^2}.
BinaryMask dilate_disk(const BinaryMask& mask, int radius);

/// 4-connected component labeling; labels are dense 1..num_components in
/// row-major first-encounter order.
LabelMap label_components(const BinaryMask& mask);

/// One Region per label, ordered by label.
std::vector<Region> region_props(const LabelMap& lm);

/// Mask of the maximum-area component; area ties go to the smaller label.
BinaryMask largest_region_mask(const LabelMap& lm);

/// Pixel centers inside or on the convex hull of the input's set pixels.
BinaryMask convex_hull_fill(const BinaryMask& mask);

struct SegmentParams {
  ThresholdSpec threshold = default_rgb_threshold();
  int dilation_radius = 3;
  int out_size = 128;
};

/// Everything segment_cell knows about one image, for reporting and IoU.
struct SegmentDetail {
  Image cell;             // out_size x out_size RGB, background zeroed
  BinaryMask hull;        // hull mask in full-image coordinates
  Region region;          // selected blob (pre-hull)
  int crop_x0 = 0, crop_y0 = 0, crop_x1 = 0, crop_y1 = 0;  // inclusive
  bool distorted = false;  // border clamping made the crop non-square
};

/// Full path from a raw RGB image to the normalized cell sub-image:
/// threshold -> dilate -> label -> largest blob -> hull fill -> square crop
/// of the original RGB (non-hull pixels zeroed) -> bilinear resize.
/// Throws Error(NoForeground) naming the failing stage when nothing survives.
SegmentDetail segment_cell_detail(const Image& rgb, const ThresholdSpec& spec,
                                  int dilation_radius, int out_size);
Image segment_cell(const Image& rgb, const ThresholdSpec& spec,
                   int dilation_radius, int out_size);

}  // namespace hemocyte
