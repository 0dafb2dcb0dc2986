#include "hemocyte/segment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hemocyte/error.hpp"

namespace hemocyte {

namespace {

struct Point {
  long long x, y;
};

long long cross(const Point& o, const Point& a, const Point& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Monotone chain, counter-clockwise, collinear points dropped.
std::vector<Point> convex_hull(std::vector<Point> pts) {
  std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) {
    return a.x != b.x ? a.x < b.x : a.y < b.y;
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Point& a, const Point& b) {
                          return a.x == b.x && a.y == b.y;
                        }),
            pts.end());
  const size_t n = pts.size();
  if (n <= 2) return pts;

  std::vector<Point> hull(2 * n);
  size_t k = 0;
  for (size_t i = 0; i < n; ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  const size_t lower = k + 1;
  for (size_t i = n - 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

bool on_segment(const Point& a, const Point& b, const Point& p) {
  if (cross(a, b, p) != 0) return false;
  return p.x >= std::min(a.x, b.x) && p.x <= std::max(a.x, b.x) &&
         p.y >= std::min(a.y, b.y) && p.y <= std::max(a.y, b.y);
}

}  // namespace

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(
      std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

ThresholdSpec default_rgb_threshold() {
  return ThresholdSpec{ColorSpace::Rgb, {0.0, 0.0, 195.0}, {205.0, 190.0, 255.0}};
}

ThresholdSpec preset_threshold(ColorSpace space) {
  switch (space) {
    case ColorSpace::Rgb:
      return default_rgb_threshold();
    case ColorSpace::Hsv:
      return ThresholdSpec{ColorSpace::Hsv, {113.0, 0.136, 0.615}, {273.0, 1.0, 1.0}};
    case ColorSpace::YCbCr:
      return ThresholdSpec{ColorSpace::YCbCr, {0.0, 150.0, 96.0}, {142.0, 255.0, 155.0}};
    case ColorSpace::Lab:
      return ThresholdSpec{ColorSpace::Lab, {48.915, -11.798, -61.422}, {56.259, 44.262, 18.364}};
    case ColorSpace::Gray:
      break;
  }
  throw Error(ErrorCode::InvalidSpec, "no threshold preset for gray images");
}

BinaryMask threshold_color(const Image& img, const ThresholdSpec& spec) {
  if (img.space != spec.space) {
    throw Error(ErrorCode::InvalidSpec,
                std::string("threshold spec is for ") + color_space_name(spec.space) +
                    " but image is " + color_space_name(img.space));
  }
  for (int c = 0; c < 3; ++c) {
    if (spec.lo[c] > spec.hi[c]) {
      throw Error(ErrorCode::InvalidSpec, "threshold lo exceeds hi");
    }
  }
  BinaryMask mask = BinaryMask::make(img.width, img.height);
  const int nc = img.channels;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      bool in = true;
      for (int c = 0; c < nc && in; ++c) {
        double v = img.at(x, y, c);
        in = v >= spec.lo[c] && v <= spec.hi[c];
      }
      mask.set(x, y, in);
    }
  }
  return mask;
}

BinaryMask dilate_disk(const BinaryMask& mask, int radius) {
  if (radius < 0) {
    throw Error(ErrorCode::InvalidInput, "dilation radius must be >= 0");
  }
  std::vector<std::pair<int, int>> offsets;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      if (dx * dx + dy * dy <= radius * radius) offsets.emplace_back(dx, dy);
    }
  }
  BinaryMask out = BinaryMask::make(mask.width, mask.height);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.get(x, y)) continue;
      for (auto [dx, dy] : offsets) {
        int nx = x + dx, ny = y + dy;
        if (nx >= 0 && nx < mask.width && ny >= 0 && ny < mask.height) {
          out.set(nx, ny);
        }
      }
    }
  }
  return out;
}

LabelMap label_components(const BinaryMask& mask) {
  LabelMap lm;
  lm.width = mask.width;
  lm.height = mask.height;
  lm.labels.assign(static_cast<size_t>(mask.width) * mask.height, 0);

  // Two-pass labeling; union-find over provisional labels.
  std::vector<std::int32_t> parent(1, 0);
  auto find = [&](std::int32_t a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  };
  auto unite = [&](std::int32_t a, std::int32_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  };

  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.get(x, y)) continue;
      std::int32_t up = y > 0 ? lm.labels[static_cast<size_t>(y - 1) * mask.width + x] : 0;
      std::int32_t left = x > 0 ? lm.labels[static_cast<size_t>(y) * mask.width + x - 1] : 0;
      std::int32_t lab;
      if (up == 0 && left == 0) {
        lab = static_cast<std::int32_t>(parent.size());
        parent.push_back(lab);
      } else if (up != 0 && left != 0) {
        lab = std::min(up, left);
        unite(up, left);
      } else {
        lab = up != 0 ? up : left;
      }
      lm.labels[static_cast<size_t>(y) * mask.width + x] = lab;
    }
  }

  // Dense relabel in row-major first-encounter order of the resolved roots.
  std::vector<std::int32_t> dense(parent.size(), 0);
  std::int32_t next = 0;
  for (auto& lab : lm.labels) {
    if (lab == 0) continue;
    std::int32_t root = find(lab);
    if (dense[root] == 0) dense[root] = ++next;
    lab = dense[root];
  }
  lm.num_components = next;
  return lm;
}

std::vector<Region> region_props(const LabelMap& lm) {
  std::vector<Region> regions(static_cast<size_t>(lm.num_components));
  for (int i = 0; i < lm.num_components; ++i) {
    regions[i].label = i + 1;
    regions[i].min_x = lm.width;
    regions[i].min_y = lm.height;
    regions[i].max_x = -1;
    regions[i].max_y = -1;
  }
  std::vector<double> sx(lm.num_components, 0.0), sy(lm.num_components, 0.0);
  for (int y = 0; y < lm.height; ++y) {
    for (int x = 0; x < lm.width; ++x) {
      std::int32_t lab = lm.label(x, y);
      if (lab == 0) continue;
      Region& r = regions[lab - 1];
      r.area += 1;
      r.min_x = std::min(r.min_x, x);
      r.min_y = std::min(r.min_y, y);
      r.max_x = std::max(r.max_x, x);
      r.max_y = std::max(r.max_y, y);
      sx[lab - 1] += x;
      sy[lab - 1] += y;
    }
  }
  for (int i = 0; i < lm.num_components; ++i) {
    regions[i].centroid_x = sx[i] / regions[i].area;
    regions[i].centroid_y = sy[i] / regions[i].area;
  }
  return regions;
}

BinaryMask largest_region_mask(const LabelMap& lm) {
  if (lm.num_components < 1) {
    throw Error(ErrorCode::NoForeground, "no connected components to select");
  }
  auto regions = region_props(lm);
  int best = 0;
  for (int i = 1; i < lm.num_components; ++i) {
    if (regions[i].area > regions[best].area) best = i;
  }
  const std::int32_t keep = regions[best].label;
  BinaryMask out = BinaryMask::make(lm.width, lm.height);
  for (int y = 0; y < lm.height; ++y) {
    for (int x = 0; x < lm.width; ++x) {
      if (lm.label(x, y) == keep) out.set(x, y);
    }
  }
  return out;
}

BinaryMask convex_hull_fill(const BinaryMask& mask) {
  std::vector<Point> pts;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (mask.get(x, y)) pts.push_back({x, y});
    }
  }
  if (pts.empty()) {
    throw Error(ErrorCode::NoForeground, "convex hull of an empty mask");
  }

  auto hull = convex_hull(pts);
  BinaryMask out = BinaryMask::make(mask.width, mask.height);

  if (hull.size() == 1) {
    out.set(static_cast<int>(hull[0].x), static_cast<int>(hull[0].y));
    return out;
  }

  long long min_x = hull[0].x, max_x = hull[0].x;
  long long min_y = hull[0].y, max_y = hull[0].y;
  for (const auto& p : hull) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }

  if (hull.size() == 2) {
    for (long long y = min_y; y <= max_y; ++y) {
      for (long long x = min_x; x <= max_x; ++x) {
        if (on_segment(hull[0], hull[1], {x, y})) {
          out.set(static_cast<int>(x), static_cast<int>(y));
        }
      }
    }
    return out;
  }

  // Inside-or-on test against every edge of the CCW hull. All-integer, so the
  // fill is exact.
  for (long long y = min_y; y <= max_y; ++y) {
    for (long long x = min_x; x <= max_x; ++x) {
      Point p{x, y};
      bool inside = true;
      for (size_t i = 0; i < hull.size() && inside; ++i) {
        const Point& a = hull[i];
        const Point& b = hull[(i + 1) % hull.size()];
        inside = cross(a, b, p) >= 0;
      }
      if (inside) out.set(static_cast<int>(x), static_cast<int>(y));
    }
  }
  return out;
}

SegmentDetail segment_cell_detail(const Image& rgb, const ThresholdSpec& spec,
                                  int dilation_radius, int out_size) {
  if (rgb.space != ColorSpace::Rgb) {
    throw Error(ErrorCode::InvalidInput, "segment_cell expects an RGB image");
  }
  if (out_size < 8) {
    throw Error(ErrorCode::InvalidInput, "normalized size must be >= 8");
  }

  const Image* working = &rgb;
  Image converted;
  if (spec.space != ColorSpace::Rgb) {
    converted = convert_color(rgb, spec.space);
    working = &converted;
  }

  BinaryMask mask = threshold_color(*working, spec);
  mask = dilate_disk(mask, dilation_radius);
  LabelMap lm = label_components(mask);
  if (lm.num_components == 0) {
    throw Error(ErrorCode::NoForeground,
                "segmentation failed at stage 'threshold': no in-range pixels");
  }

  SegmentDetail detail;
  auto regions = region_props(lm);
  int best = 0;
  for (int i = 1; i < lm.num_components; ++i) {
    if (regions[i].area > regions[best].area) best = i;
  }
  detail.region = regions[best];

  BinaryMask blob = largest_region_mask(lm);
  detail.hull = convex_hull_fill(blob);

  // Tight hull bbox, padded out to a square, clamped at the borders.
  int bx0 = rgb.width, by0 = rgb.height, bx1 = -1, by1 = -1;
  for (int y = 0; y < rgb.height; ++y) {
    for (int x = 0; x < rgb.width; ++x) {
      if (!detail.hull.get(x, y)) continue;
      bx0 = std::min(bx0, x);
      by0 = std::min(by0, y);
      bx1 = std::max(bx1, x);
      by1 = std::max(by1, y);
    }
  }
  const int w = bx1 - bx0 + 1;
  const int h = by1 - by0 + 1;
  const int side = std::max(w, h);
  int pad_l = (side - w) / 2;
  int pad_t = (side - h) / 2;
  int x0 = std::max(0, bx0 - pad_l);
  int y0 = std::max(0, by0 - pad_t);
  int x1 = std::min(rgb.width - 1, x0 + side - 1);
  int y1 = std::min(rgb.height - 1, y0 + side - 1);
  x0 = std::max(0, x1 - side + 1);
  y0 = std::max(0, y1 - side + 1);
  detail.crop_x0 = x0;
  detail.crop_y0 = y0;
  detail.crop_x1 = x1;
  detail.crop_y1 = y1;
  detail.distorted = (x1 - x0) != (y1 - y0);

  Image crop = Image::make(x1 - x0 + 1, y1 - y0 + 1, ColorSpace::Rgb);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      if (!detail.hull.get(x, y)) continue;
      for (int c = 0; c < 3; ++c) {
        crop.at(x - x0, y - y0, c) = rgb.at(x, y, c);
      }
    }
  }
  detail.cell = resize_bilinear(crop, out_size, out_size);
  return detail;
}

Image segment_cell(const Image& rgb, const ThresholdSpec& spec,
                   int dilation_radius, int out_size) {
  return segment_cell_detail(rgb, spec, dilation_radius, out_size).cell;
}

}  // namespace hemocyte
