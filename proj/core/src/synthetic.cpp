#include "hemocyte/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "hemocyte/error.hpp"
#include "hemocyte/hash.hpp"
#include "hemocyte/image_io.hpp"

namespace fs = std::filesystem;

namespace hemocyte {

namespace {

constexpr int kWidth = 320;
constexpr int kHeight = 240;
constexpr double kPi = 3.14159265358979323846;

struct Rgb {
  double r, g, b;
};

// In-threshold material must stay inside R<=205, G<=190, B>=195 after the
// per-pixel jitter below; out-of-threshold material must stay outside with
// similar margins.
constexpr Rgb kBackground{244, 214, 222};
constexpr Rgb kRedCell{225, 148, 162};
constexpr Rgb kCytoplasm{220, 202, 238};
constexpr Rgb kPlatelet{160, 100, 225};
constexpr Rgb kGranule{235, 150, 70};

struct Rng {
  std::mt19937_64 gen;
  explicit Rng(std::uint64_t seed) : gen(seed) {}
  // [lo, hi] inclusive
  int next_int(int lo, int hi) { return lo + static_cast<int>(gen() % static_cast<std::uint64_t>(hi - lo + 1)); }
  // [lo, hi) with 53-bit resolution; avoids distribution objects for
  // cross-platform stability
  double next_real(double lo, double hi) {
    const double u = static_cast<double>(gen() >> 11) * (1.0 / 9007199254740992.0);
    return lo + u * (hi - lo);
  }
};

// Position-keyed noise, independent of drawing order.
double pixel_noise(int x, int y, std::uint64_t salt, double amplitude) {
  std::uint64_t h = kFnvOffset;
  h = fnv1a64(&x, sizeof(x), h);
  h = fnv1a64(&y, sizeof(y), h);
  h = fnv1a64(&salt, sizeof(salt), h);
  const double u = static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0);
  return (2.0 * u - 1.0) * amplitude;
}

class Canvas {
 public:
  Canvas(std::uint64_t noise_salt) : img_(Image::make(kWidth, kHeight, ColorSpace::Rgb)), salt_(noise_salt) {}

  Image take() { return std::move(img_); }

  void put(int x, int y, const Rgb& c, double jitter) {
    if (x < 0 || y < 0 || x >= kWidth || y >= kHeight) return;
    const double r = c.r + pixel_noise(x, y, salt_ ^ 0x1111, jitter);
    const double g = c.g + pixel_noise(x, y, salt_ ^ 0x2222, jitter);
    const double b = c.b + pixel_noise(x, y, salt_ ^ 0x3333, jitter);
    float* p = img_.data.data() + (static_cast<size_t>(y) * kWidth + x) * 3;
    p[0] = static_cast<float>(std::clamp(r, 0.0, 255.0));
    p[1] = static_cast<float>(std::clamp(g, 0.0, 255.0));
    p[2] = static_cast<float>(std::clamp(b, 0.0, 255.0));
  }

  void fill(const Rgb& c, double jitter) {
    for (int y = 0; y < kHeight; ++y)
      for (int x = 0; x < kWidth; ++x) put(x, y, c, jitter);
  }

  void disk(double cx, double cy, double radius, const Rgb& c, double jitter) {
    const int x0 = static_cast<int>(std::floor(cx - radius)), x1 = static_cast<int>(std::ceil(cx + radius));
    const int y0 = static_cast<int>(std::floor(cy - radius)), y1 = static_cast<int>(std::ceil(cy + radius));
    const double r2 = radius * radius;
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const double dx = x - cx, dy = y - cy;
        if (dx * dx + dy * dy <= r2) put(x, y, c, jitter);
      }
  }

  void ring(double cx, double cy, double r_out, double r_in, const Rgb& c, double jitter) {
    const int x0 = static_cast<int>(std::floor(cx - r_out)), x1 = static_cast<int>(std::ceil(cx + r_out));
    const int y0 = static_cast<int>(std::floor(cy - r_out)), y1 = static_cast<int>(std::ceil(cy + r_out));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const double dx = x - cx, dy = y - cy;
        const double d2 = dx * dx + dy * dy;
        if (d2 <= r_out * r_out && d2 >= r_in * r_in) put(x, y, c, jitter);
      }
  }

  // Thick segment drawn as a chain of disks.
  void capsule(double x0, double y0, double x1, double y1, double half_width, const Rgb& c,
               double jitter) {
    const double len = std::hypot(x1 - x0, y1 - y0);
    const int steps = std::max(1, static_cast<int>(std::ceil(len)));
    for (int s = 0; s <= steps; ++s) {
      const double t = static_cast<double>(s) / steps;
      disk(x0 + t * (x1 - x0), y0 + t * (y1 - y0), half_width, c, jitter);
    }
  }

 private:
  Image img_;
  std::uint64_t salt_;
};

struct CellLayout {
  double cx, cy;      // cell center on the canvas
  double angle;       // global rotation
  double scale;
  Rgb nucleus;
};

// Rotated local coordinates -> canvas coordinates.
struct Frame {
  const CellLayout& l;
  double x(double lx, double ly) const {
    return l.cx + l.scale * (lx * std::cos(l.angle) - ly * std::sin(l.angle));
  }
  double y(double lx, double ly) const {
    return l.cy + l.scale * (lx * std::sin(l.angle) + ly * std::cos(l.angle));
  }
  double s(double v) const { return l.scale * v; }
};

// Every class comes in two morphological variants so the feature clouds are
// bimodal, the way real smears mix immature and mature forms.
void draw_lymphocyte(Canvas& canvas, const CellLayout& l, Rng& rng) {
  Frame f{l};
  const double r = 56.0;
  if (rng.next_int(0, 1) == 0) {
    canvas.disk(f.x(0, 0), f.y(0, 0), f.s(r + 13), kCytoplasm, 6.0);
    canvas.disk(f.x(0, 0), f.y(0, 0), f.s(r), l.nucleus, 12.0);
  } else {
    // elongated form: a stadium-shaped nucleus
    const double half = rng.next_real(26.0, 34.0);
    canvas.capsule(f.x(-half, 0), f.y(-half, 0), f.x(half, 0), f.y(half, 0), f.s(r - 14),
                   kCytoplasm, 6.0);
    canvas.capsule(f.x(-half, 0), f.y(-half, 0), f.x(half, 0), f.y(half, 0), f.s(r - 24),
                   l.nucleus, 12.0);
  }
}

void draw_monocyte(Canvas& canvas, const CellLayout& l, Rng& rng) {
  Frame f{l};
  const double r = rng.next_real(56.0, 66.0);
  const bool deep = rng.next_int(0, 1) == 1;
  const double bite_r = r * (deep ? rng.next_real(0.62, 0.72) : rng.next_real(0.40, 0.50));
  const double bite_d = r * (deep ? rng.next_real(0.65, 0.78) : rng.next_real(0.86, 0.96));
  canvas.disk(f.x(0, 0), f.y(0, 0), f.s(r + 13), kCytoplasm, 6.0);
  canvas.disk(f.x(0, 0), f.y(0, 0), f.s(r), l.nucleus, 12.0);
  // the indentation that turns the disk into a kidney form
  canvas.disk(f.x(bite_d, 0), f.y(bite_d, 0), f.s(bite_r), kCytoplasm, 6.0);
}

void draw_neutrophil(Canvas& canvas, const CellLayout& l, Rng& rng) {
  Frame f{l};
  const bool compact = rng.next_int(0, 1) == 0;
  const int lobes = compact ? 3 : 5;
  const double ring_r = compact ? rng.next_real(30.0, 35.0) : rng.next_real(40.0, 46.0);
  canvas.disk(f.x(0, 0), f.y(0, 0), f.s(ring_r + 32), kCytoplasm, 6.0);
  std::vector<std::pair<double, double>> centers;
  for (int i = 0; i < lobes; ++i) {
    const double theta = 2.0 * kPi * i / lobes + rng.next_real(-0.25, 0.25);
    centers.push_back({ring_r * std::cos(theta), ring_r * std::sin(theta)});
  }
  // chromatin strands keep the lobes one connected component
  for (int i = 0; i < lobes; ++i) {
    const auto& a = centers[i];
    const auto& b = centers[(i + 1) % lobes];
    canvas.capsule(f.x(a.first, a.second), f.y(a.first, a.second), f.x(b.first, b.second),
                   f.y(b.first, b.second), f.s(3.5), l.nucleus, 12.0);
  }
  for (int i = 0; i < lobes; ++i) {
    const double lr = rng.next_real(21.0, 28.0);
    canvas.disk(f.x(centers[i].first, centers[i].second), f.y(centers[i].first, centers[i].second),
                f.s(lr), l.nucleus, 12.0);
  }
}

void draw_eosinophil(Canvas& canvas, const CellLayout& l, Rng& rng) {
  Frame f{l};
  const double off = rng.next_real(30.0, 38.0);
  const double r1 = rng.next_real(32.0, 40.0);
  const double r2 = rng.next_real(32.0, 40.0);
  canvas.disk(f.x(0, 0), f.y(0, 0), f.s(off + std::max(r1, r2) + 12), kCytoplasm, 6.0);
  canvas.capsule(f.x(-off, 0), f.y(-off, 0), f.x(off, 0), f.y(off, 0), f.s(6.0), l.nucleus, 12.0);
  canvas.disk(f.x(-off, 0), f.y(-off, 0), f.s(r1), l.nucleus, 12.0);
  canvas.disk(f.x(off, 0), f.y(off, 0), f.s(r2), l.nucleus, 12.0);
  // the stain granules eosinophils are named for; either a dense dusting of
  // fine granules or a sparse scatter of coarse ones
  const bool fine = rng.next_int(0, 1) == 0;
  const int granules = fine ? rng.next_int(42, 58) : rng.next_int(13, 20);
  for (int i = 0; i < granules; ++i) {
    const double side = i % 2 == 0 ? -off : off;
    const double rr = (i % 2 == 0 ? r1 : r2) * 0.75;
    const double theta = rng.next_real(0.0, 2.0 * kPi);
    const double d = rr * std::sqrt(rng.next_real(0.0, 1.0));
    const double gr = fine ? rng.next_real(1.3, 2.2) : rng.next_real(3.0, 4.5);
    canvas.disk(f.x(side + d * std::cos(theta), d * std::sin(theta)),
                f.y(side + d * std::cos(theta), d * std::sin(theta)), f.s(gr), kGranule, 10.0);
  }
}

bool in_threshold(const float* p) {
  return p[0] <= 205.0f && p[1] <= 190.0f && p[2] >= 195.0f;
}

}  // namespace

Image synth_smear_boxed(int class_label, std::uint64_t seed, SynthBox* box_out) {
  if (class_label < 0 || class_label > 3)
    throw Error(ErrorCode::InvalidParams, "synth_smear: class label must be 0..3");

  Rng rng(seed * 0x9e3779b97f4a7c15ull + static_cast<std::uint64_t>(class_label) + 1);
  Canvas canvas(rng.gen());

  canvas.fill(kBackground, 6.0);

  const int rbcs = rng.next_int(6, 10);
  for (int i = 0; i < rbcs; ++i) {
    const double r = rng.next_real(26.0, 38.0);
    const double cx = rng.next_real(0, kWidth);
    const double cy = rng.next_real(0, kHeight);
    const double width = rng.next_real(7.0, 10.0);
    canvas.ring(cx, cy, r, r - width, kRedCell, 8.0);
  }

  CellLayout layout;
  layout.cx = kWidth / 2.0 + rng.next_real(-20.0, 20.0);
  layout.cy = kHeight / 2.0 + rng.next_real(-12.0, 12.0);
  layout.angle = rng.next_real(0.0, 2.0 * kPi);
  layout.scale = rng.next_real(0.85, 1.15);
  layout.nucleus = Rgb{rng.next_real(120.0, 180.0), rng.next_real(60.0, 140.0),
                       rng.next_real(215.0, 240.0)};

  const int platelets = rng.next_int(2, 4);
  for (int i = 0; i < platelets; ++i) {
    double px = 0, py = 0;
    bool placed = false;
    for (int attempt = 0; attempt < 20 && !placed; ++attempt) {
      px = rng.next_real(10.0, kWidth - 10.0);
      py = rng.next_real(10.0, kHeight - 10.0);
      placed = std::hypot(px - layout.cx, py - layout.cy) > 120.0;
    }
    if (placed) {
      const double pr = rng.next_real(3.0, 6.0);
      canvas.disk(px, py, pr, kPlatelet, 8.0);
    }
  }

  switch (class_label) {
    case 0: draw_eosinophil(canvas, layout, rng); break;
    case 1: draw_lymphocyte(canvas, layout, rng); break;
    case 2: draw_monocyte(canvas, layout, rng); break;
    case 3: draw_neutrophil(canvas, layout, rng); break;
  }

  Image img = canvas.take();

  if (box_out) {
    // tight box of in-threshold pixels within a disk around the cell;
    // platelets sit farther than 120 px from the center so they never enter
    const int wx0 = std::max(0, static_cast<int>(layout.cx) - 110);
    const int wx1 = std::min(kWidth - 1, static_cast<int>(layout.cx) + 110);
    const int wy0 = std::max(0, static_cast<int>(layout.cy) - 110);
    const int wy1 = std::min(kHeight - 1, static_cast<int>(layout.cy) + 110);
    int xmin = kWidth, ymin = kHeight, xmax = -1, ymax = -1;
    for (int y = wy0; y <= wy1; ++y)
      for (int x = wx0; x <= wx1; ++x) {
        const double dx = x - layout.cx, dy = y - layout.cy;
        if (dx * dx + dy * dy > 110.0 * 110.0) continue;
        const float* p = img.data.data() + (static_cast<size_t>(y) * kWidth + x) * 3;
        if (!in_threshold(p)) continue;
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
      }
    if (xmax < 0) throw Error(ErrorCode::NoForeground, "synth_smear: no nuclear pixels rendered");
    *box_out = SynthBox{xmin, ymin, xmax, ymax};
  }
  return img;
}

Image synth_smear(int class_label, std::uint64_t seed) {
  return synth_smear_boxed(class_label, seed, nullptr);
}

void write_synthetic_dataset(const std::string& root, int per_class, std::uint64_t seed) {
  if (per_class < 1) throw Error(ErrorCode::InvalidParams, "write_synthetic_dataset: per_class >= 1");
  static const char* kDirs[4] = {"EOSINOPHIL", "LYMPHOCYTE", "MONOCYTE", "NEUTROPHIL"};
  static const char* kStems[4] = {"eos", "lym", "mon", "neu"};
  for (int label = 0; label < 4; ++label) {
    const fs::path dir = fs::path(root) / kDirs[label];
    fs::create_directories(dir);
    for (int i = 0; i < per_class; ++i) {
      char name[32];
      std::snprintf(name, sizeof(name), "%s-%04d.png", kStems[label], i);
      const Image img = synth_smear(label, seed + static_cast<std::uint64_t>(i) * 4 + label);
      save_png_rgb(img, (dir / name).string());
    }
  }
}

void write_synthetic_annotated(const std::string& dir, int count, std::uint64_t seed) {
  if (count < 1) throw Error(ErrorCode::InvalidParams, "write_synthetic_annotated: count >= 1");
  fs::create_directories(dir);
  for (int i = 0; i < count; ++i) {
    const int label = i % 4;
    SynthBox box;
    const Image img = synth_smear_boxed(label, seed + static_cast<std::uint64_t>(i), &box);
    char stem[32];
    std::snprintf(stem, sizeof(stem), "sample-%04d", i);
    const std::string png = std::string(stem) + ".png";
    save_png_rgb(img, (fs::path(dir) / png).string());

    std::ofstream xml(fs::path(dir) / (std::string(stem) + ".xml"), std::ios::binary | std::ios::trunc);
    if (!xml) throw Error(ErrorCode::IoError, "cannot write annotation for " + png);
    xml << "<annotation>\n"
        << "  <filename>" << png << "</filename>\n"
        << "  <size><width>" << img.width << "</width><height>" << img.height
        << "</height><depth>3</depth></size>\n"
        << "  <object>\n"
        << "    <name>WBC</name>\n"
        << "    <bndbox>\n"
        << "      <xmin>" << box.xmin << "</xmin>\n"
        << "      <ymin>" << box.ymin << "</ymin>\n"
        << "      <xmax>" << box.xmax << "</xmax>\n"
        << "      <ymax>" << box.ymax << "</ymax>\n"
        << "    </bndbox>\n"
        << "  </object>\n"
        << "</annotation>\n";
  }
}

}  // namespace hemocyte
