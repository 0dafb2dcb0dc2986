#include <benchmark/benchmark.h>

#include "hemocyte/features.hpp"
#include "hemocyte/image.hpp"
#include "hemocyte/segment.hpp"
#include "hemocyte/synthetic.hpp"

using namespace hemocyte;

namespace {

const Image& smear() {
  static const Image img = synth_smear(3, 11);  // a neutrophil, 320x240
  return img;
}

const Image& cell() {
  static const Image img = segment_cell(smear(), default_rgb_threshold(), 3, 128);
  return img;
}

const BinaryMask& smear_mask() {
  static const BinaryMask mask = threshold_color(smear(), default_rgb_threshold());
  return mask;
}

}  // namespace

static void BM_RgbToHsv(benchmark::State& state) {
  for (auto _ : state) {
    Image out = convert_color(smear(), ColorSpace::Hsv);
    benchmark::DoNotOptimize(out.data.data());
  }
}
BENCHMARK(BM_RgbToHsv);

static void BM_RgbToYCbCr(benchmark::State& state) {
  for (auto _ : state) {
    Image out = convert_color(smear(), ColorSpace::YCbCr);
    benchmark::DoNotOptimize(out.data.data());
  }
}
BENCHMARK(BM_RgbToYCbCr);

static void BM_RgbToLab(benchmark::State& state) {
  for (auto _ : state) {
    Image out = convert_color(smear(), ColorSpace::Lab);
    benchmark::DoNotOptimize(out.data.data());
  }
}
BENCHMARK(BM_RgbToLab);

static void BM_ThresholdColor(benchmark::State& state) {
  for (auto _ : state) {
    BinaryMask mask = threshold_color(smear(), default_rgb_threshold());
    benchmark::DoNotOptimize(mask.bits.data());
  }
}
BENCHMARK(BM_ThresholdColor);

static void BM_DilateDisk(benchmark::State& state) {
  const int radius = static_cast<int>(state.range(0));
  for (auto _ : state) {
    BinaryMask out = dilate_disk(smear_mask(), radius);
    benchmark::DoNotOptimize(out.bits.data());
  }
}
BENCHMARK(BM_DilateDisk)->Arg(1)->Arg(2)->Arg(3);

static void BM_LabelComponents(benchmark::State& state) {
  static const BinaryMask dilated = dilate_disk(smear_mask(), 3);
  for (auto _ : state) {
    LabelMap lm = label_components(dilated);
    benchmark::DoNotOptimize(lm.labels.data());
  }
}
BENCHMARK(BM_LabelComponents);

static void BM_ConvexHullFill(benchmark::State& state) {
  static const BinaryMask blob = largest_region_mask(label_components(dilate_disk(smear_mask(), 3)));
  for (auto _ : state) {
    BinaryMask hull = convex_hull_fill(blob);
    benchmark::DoNotOptimize(hull.bits.data());
  }
}
BENCHMARK(BM_ConvexHullFill);

// the whole front half: threshold, dilate, label, hull, crop, resize
static void BM_SegmentCell(benchmark::State& state) {
  for (auto _ : state) {
    Image out = segment_cell(smear(), default_rgb_threshold(), 3, 128);
    benchmark::DoNotOptimize(out.data.data());
  }
}
BENCHMARK(BM_SegmentCell);

static void BM_ResizeBilinear(benchmark::State& state) {
  for (auto _ : state) {
    Image out = resize_bilinear(smear(), 128, 128);
    benchmark::DoNotOptimize(out.data.data());
  }
}
BENCHMARK(BM_ResizeBilinear);

static void BM_Hog(benchmark::State& state) {
  HogParams params;
  params.cell_size = static_cast<int>(state.range(0));
  for (auto _ : state) {
    FeatureVector v = hog_descriptor(cell(), params);
    benchmark::DoNotOptimize(v.values.data());
  }
}
BENCHMARK(BM_Hog)->Arg(8)->Arg(16)->Arg(32);

static void BM_HarrisCorners(benchmark::State& state) {
  for (auto _ : state) {
    auto corners = harris_corners(cell());
    benchmark::DoNotOptimize(corners.data());
  }
}
BENCHMARK(BM_HarrisCorners);

static void BM_FastCorners(benchmark::State& state) {
  for (auto _ : state) {
    auto corners = fast_corners(cell(), 20);
    benchmark::DoNotOptimize(corners.data());
  }
}
BENCHMARK(BM_FastCorners);

BENCHMARK_MAIN();
