#include "hemocyte/features.hpp"

#include <algorithm>
#include <cmath>

#include "hemocyte/error.hpp"

namespace hemocyte {

namespace {

constexpr double kPi = 3.14159265358979323846;

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

// Centered difference with clamped borders, per channel.
inline void gradient_at(const Image& img, int x, int y, int c, double* gx, double* gy) {
  *gx = img.at(clampi(x + 1, 0, img.width - 1), y, c) -
        img.at(clampi(x - 1, 0, img.width - 1), y, c);
  *gy = img.at(x, clampi(y + 1, 0, img.height - 1), c) -
        img.at(x, clampi(y - 1, 0, img.height - 1), c);
}

Image ensure_gray(const Image& img) {
  if (img.space == ColorSpace::Gray) return img;
  if (img.space == ColorSpace::Rgb) return to_grayscale(img);
  throw Error(ErrorCode::InvalidInput, "expected an RGB or grayscale image");
}

// Bresenham circle of radius 3, starting at 12 o'clock, clockwise.
constexpr int kCircle[16][2] = {
    {0, -3}, {1, -3}, {2, -2}, {3, -1}, {3, 0},  {3, 1},  {2, 2},  {1, 3},
    {0, 3},  {-1, 3}, {-2, 2}, {-3, 1}, {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3}};

double fast_score(const Image& gray, int x, int y, int t) {
  double p = gray.at(x, y);
  double bright = 0.0, dark = 0.0;
  for (const auto& off : kCircle) {
    double v = gray.at(x + off[0], y + off[1]);
    if (v > p + t) bright += v - p - t;
    if (v < p - t) dark += p - t - v;
  }
  return std::max(bright, dark);
}

}  // namespace

std::size_t hog_descriptor_length(int width, int height, const HogParams& p) {
  if (p.cell_size <= 0 || width % p.cell_size != 0 || height % p.cell_size != 0) {
    throw Error(ErrorCode::InvalidParams,
                "image dimensions must be divisible by the HOG cell size");
  }
  if (p.bins < 2) throw Error(ErrorCode::InvalidParams, "HOG needs at least 2 bins");
  const int cx = width / p.cell_size;
  const int cy = height / p.cell_size;
  if (cx < p.block_cells || cy < p.block_cells) {
    throw Error(ErrorCode::InvalidParams, "image too small for a HOG block");
  }
  const int bx = (cx - p.block_cells) / p.block_stride + 1;
  const int by = (cy - p.block_cells) / p.block_stride + 1;
  return static_cast<std::size_t>(bx) * by * p.block_cells * p.block_cells * p.bins;
}

FeatureVector hog_descriptor(const Image& img, const HogParams& p) {
  if (img.space != ColorSpace::Rgb && img.space != ColorSpace::Gray) {
    throw Error(ErrorCode::InvalidParams, "HOG expects an RGB or grayscale image");
  }
  const std::size_t expected_len = hog_descriptor_length(img.width, img.height, p);

  const int cells_x = img.width / p.cell_size;
  const int cells_y = img.height / p.cell_size;
  const double range = p.signed_gradients ? 360.0 : 180.0;
  const double bin_width = range / p.bins;

  // Per-cell orientation histograms.
  std::vector<double> hist(static_cast<size_t>(cells_x) * cells_y * p.bins, 0.0);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double gx = 0.0, gy = 0.0;
      if (img.channels == 1) {
        gradient_at(img, x, y, 0, &gx, &gy);
      } else {
        double best = -1.0;
        for (int c = 0; c < img.channels; ++c) {
          double cgx, cgy;
          gradient_at(img, x, y, c, &cgx, &cgy);
          double mag2 = cgx * cgx + cgy * cgy;
          if (mag2 > best) {
            best = mag2;
            gx = cgx;
            gy = cgy;
          }
        }
      }
      double mag = std::sqrt(gx * gx + gy * gy);
      if (mag == 0.0) continue;
      double angle = std::atan2(gy, gx) * 180.0 / kPi;  // (-180, 180]
      if (p.signed_gradients) {
        if (angle < 0.0) angle += 360.0;
      } else {
        if (angle < 0.0) angle += 180.0;
        if (angle >= 180.0) angle -= 180.0;
      }
      // Linear vote split between the two nearest bin centers (i + 0.5) * w.
      double pos = angle / bin_width - 0.5;
      int b0 = static_cast<int>(std::floor(pos));
      double frac = pos - b0;
      int bin0 = (b0 % p.bins + p.bins) % p.bins;
      int bin1 = (bin0 + 1) % p.bins;
      const int cx = x / p.cell_size;
      const int cy = y / p.cell_size;
      double* cell = &hist[(static_cast<size_t>(cy) * cells_x + cx) * p.bins];
      cell[bin0] += mag * (1.0 - frac);
      cell[bin1] += mag * frac;
    }
  }

  // Blocks of block_cells x block_cells cells, L2-normalized.
  FeatureVector fv;
  fv.values.reserve(expected_len);
  const int blocks_x = (cells_x - p.block_cells) / p.block_stride + 1;
  const int blocks_y = (cells_y - p.block_cells) / p.block_stride + 1;
  std::vector<double> block(static_cast<size_t>(p.block_cells) * p.block_cells * p.bins);
  for (int by = 0; by < blocks_y; ++by) {
    for (int bx = 0; bx < blocks_x; ++bx) {
      size_t bi = 0;
      double sumsq = 0.0;
      for (int dy = 0; dy < p.block_cells; ++dy) {
        for (int dx = 0; dx < p.block_cells; ++dx) {
          const int cx = bx * p.block_stride + dx;
          const int cy = by * p.block_stride + dy;
          const double* cell = &hist[(static_cast<size_t>(cy) * cells_x + cx) * p.bins];
          for (int b = 0; b < p.bins; ++b, ++bi) {
            block[bi] = cell[b];
            sumsq += cell[b] * cell[b];
          }
        }
      }
      const double inv = 1.0 / std::sqrt(sumsq + 1e-12);
      for (double v : block) fv.values.push_back(v * inv);
    }
  }

  switch (p.cell_size) {
    case 8: fv.descriptor_id = "hog8"; break;
    case 16: fv.descriptor_id = "hog16"; break;
    case 32: fv.descriptor_id = "hog32"; break;
    default: fv.descriptor_id = "hog" + std::to_string(p.cell_size); break;
  }
  return fv;
}

std::vector<double> harris_response(const Image& img, double k, int window) {
  if (window < 1 || window % 2 == 0) {
    throw Error(ErrorCode::InvalidParams, "Harris window must be odd");
  }
  Image gray = ensure_gray(img);
  const int w = gray.width, h = gray.height;

  std::vector<double> ixx(static_cast<size_t>(w) * h), iyy(ixx.size()), ixy(ixx.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double gx, gy;
      gradient_at(gray, x, y, 0, &gx, &gy);
      size_t i = static_cast<size_t>(y) * w + x;
      ixx[i] = gx * gx;
      iyy[i] = gy * gy;
      ixy[i] = gx * gy;
    }
  }

  // Separable Gaussian window, sigma = window / 3.
  const int half = window / 2;
  const double sigma = window / 3.0;
  std::vector<double> kernel(window);
  double ksum = 0.0;
  for (int i = 0; i < window; ++i) {
    double d = i - half;
    kernel[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    ksum += kernel[i];
  }
  for (double& v : kernel) v /= ksum;

  auto smooth = [&](std::vector<double>& m) {
    std::vector<double> tmp(m.size());
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int i = -half; i <= half; ++i) {
          acc += kernel[i + half] * m[static_cast<size_t>(y) * w + clampi(x + i, 0, w - 1)];
        }
        tmp[static_cast<size_t>(y) * w + x] = acc;
      }
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int i = -half; i <= half; ++i) {
          acc += kernel[i + half] * tmp[static_cast<size_t>(clampi(y + i, 0, h - 1)) * w + x];
        }
        m[static_cast<size_t>(y) * w + x] = acc;
      }
    }
  };
  smooth(ixx);
  smooth(iyy);
  smooth(ixy);

  std::vector<double> response(ixx.size());
  for (size_t i = 0; i < response.size(); ++i) {
    double det = ixx[i] * iyy[i] - ixy[i] * ixy[i];
    double tr = ixx[i] + iyy[i];
    response[i] = det - k * tr * tr;
  }
  return response;
}

std::vector<Corner> harris_corners(const Image& img, double k, int window,
                                   double threshold) {
  Image gray = ensure_gray(img);
  auto response = harris_response(gray, k, window);
  const int w = gray.width, h = gray.height;

  double max_r = 0.0;
  for (double r : response) max_r = std::max(max_r, r);
  if (max_r <= 0.0) return {};
  const double cutoff = threshold * max_r;

  std::vector<Corner> corners;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double r = response[static_cast<size_t>(y) * w + x];
      if (r < cutoff) continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy) {
        for (int dx = -1; dx <= 1 && is_max; ++dx) {
          if (dx == 0 && dy == 0) continue;
          int nx = x + dx, ny = y + dy;
          if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
          is_max = response[static_cast<size_t>(ny) * w + nx] <= r;
        }
      }
      if (is_max) corners.push_back({x, y, r});
    }
  }
  std::stable_sort(corners.begin(), corners.end(),
                   [](const Corner& a, const Corner& b) { return a.response > b.response; });
  return corners;
}

bool fast_segment_test(const Image& gray, int x, int y, int t, int n) {
  if (x < 3 || y < 3 || x >= gray.width - 3 || y >= gray.height - 3) return false;
  const double p = gray.at(x, y);
  // 1 = brighter, -1 = darker, 0 = similar; doubled to scan arcs circularly.
  int state[32];
  for (int i = 0; i < 16; ++i) {
    double v = gray.at(x + kCircle[i][0], y + kCircle[i][1]);
    state[i] = v > p + t ? 1 : (v < p - t ? -1 : 0);
    state[i + 16] = state[i];
  }
  int run = 0, run_sign = 0;
  for (int i = 0; i < 32; ++i) {
    if (state[i] != 0 && state[i] == run_sign) {
      if (++run >= n) return true;
    } else {
      run_sign = state[i];
      run = state[i] != 0 ? 1 : 0;
    }
  }
  return false;
}

std::vector<Corner> fast_corners(const Image& img, int t, int n) {
  if (n < 9 || n > 16) {
    throw Error(ErrorCode::InvalidParams, "FAST arc length must be in [9, 16]");
  }
  if (t < 1) throw Error(ErrorCode::InvalidParams, "FAST threshold must be >= 1");
  Image gray = ensure_gray(img);

  std::vector<Corner> raw;
  for (int y = 3; y < gray.height - 3; ++y) {
    for (int x = 3; x < gray.width - 3; ++x) {
      if (fast_segment_test(gray, x, y, t, n)) {
        raw.push_back({x, y, fast_score(gray, x, y, t)});
      }
    }
  }

  // 3x3 NMS on the score; equal scores keep the earlier (row-major) corner.
  std::vector<double> score(static_cast<size_t>(gray.width) * gray.height, -1.0);
  for (const auto& c : raw) {
    score[static_cast<size_t>(c.y) * gray.width + c.x] = c.response;
  }
  std::vector<Corner> kept;
  for (const auto& c : raw) {
    bool suppressed = false;
    for (int dy = -1; dy <= 1 && !suppressed; ++dy) {
      for (int dx = -1; dx <= 1 && !suppressed; ++dx) {
        if (dx == 0 && dy == 0) continue;
        int nx = c.x + dx, ny = c.y + dy;
        if (nx < 0 || nx >= gray.width || ny < 0 || ny >= gray.height) continue;
        double s = score[static_cast<size_t>(ny) * gray.width + nx];
        if (s > c.response) suppressed = true;
        if (s == c.response && (ny < c.y || (ny == c.y && nx < c.x))) suppressed = true;
      }
    }
    if (!suppressed) kept.push_back(c);
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const Corner& a, const Corner& b) { return a.response > b.response; });
  return kept;
}

}  // namespace hemocyte
