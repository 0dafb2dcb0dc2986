#include "hemocyte/image.hpp"

#include <algorithm>
#include <cmath>

#include "hemocyte/error.hpp"

namespace hemocyte {

namespace {

constexpr double kD65X = 0.95047;
constexpr double kD65Y = 1.00000;
constexpr double kD65Z = 1.08883;

double srgb_to_linear(double v) {
  return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
  constexpr double eps = 216.0 / 24389.0;   // (6/29)^3
  constexpr double kappa = 24389.0 / 27.0;  // (29/3)^3
  return t > eps ? std::cbrt(t) : (kappa * t + 16.0) / 116.0;
}

float clamp_u8(double v) {
  return static_cast<float>(std::clamp(v, 0.0, 255.0));
}

void rgb_to_hsv(double r, double g, double b, float* out) {
  double mx = std::max({r, g, b});
  double mn = std::min({r, g, b});
  double delta = mx - mn;
  double h = 0.0;
  if (delta > 0.0) {
    if (mx == r) {
      h = 60.0 * std::fmod((g - b) / delta, 6.0);
    } else if (mx == g) {
      h = 60.0 * ((b - r) / delta + 2.0);
    } else {
      h = 60.0 * ((r - g) / delta + 4.0);
    }
    if (h < 0.0) h += 360.0;
    if (h >= 360.0) h -= 360.0;
  }
  double s = mx <= 0.0 ? 0.0 : delta / mx;
  double v = mx / 255.0;
  out[0] = static_cast<float>(h);
  out[1] = static_cast<float>(s);
  out[2] = static_cast<float>(v);
}

void rgb_to_ycbcr(double r, double g, double b, float* out) {
  // Full-range 601: chroma offset 128, no headroom scaling.
  double y = 0.299 * r + 0.587 * g + 0.114 * b;
  double cb = 128.0 + (b - y) * 0.564;
  double cr = 128.0 + (r - y) * 0.713;
  out[0] = clamp_u8(std::round(y));
  out[1] = clamp_u8(std::round(cb));
  out[2] = clamp_u8(std::round(cr));
}

void rgb_to_lab(double r, double g, double b, float* out) {
  double rl = srgb_to_linear(r / 255.0);
  double gl = srgb_to_linear(g / 255.0);
  double bl = srgb_to_linear(b / 255.0);
  double x = 0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl;
  double y = 0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl;
  double z = 0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl;
  double fx = lab_f(x / kD65X);
  double fy = lab_f(y / kD65Y);
  double fz = lab_f(z / kD65Z);
  out[0] = static_cast<float>(116.0 * fy - 16.0);
  out[1] = static_cast<float>(500.0 * (fx - fy));
  out[2] = static_cast<float>(200.0 * (fy - fz));
}

bool integral_space(ColorSpace space) {
  return space == ColorSpace::Rgb || space == ColorSpace::YCbCr ||
         space == ColorSpace::Gray;
}

}  // namespace

const char* color_space_name(ColorSpace space) {
  switch (space) {
    case ColorSpace::Rgb: return "RGB";
    case ColorSpace::Hsv: return "HSV";
    case ColorSpace::YCbCr: return "YCbCr";
    case ColorSpace::Lab: return "LAB";
    case ColorSpace::Gray: return "GRAY";
  }
  return "?";
}

ColorSpace color_space_from_name(std::string_view name) {
  std::string up(name);
  std::transform(up.begin(), up.end(), up.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  if (up == "RGB") return ColorSpace::Rgb;
  if (up == "HSV") return ColorSpace::Hsv;
  if (up == "YCBCR") return ColorSpace::YCbCr;
  if (up == "LAB" || up == "CIELAB") return ColorSpace::Lab;
  if (up == "GRAY" || up == "GREY") return ColorSpace::Gray;
  throw Error(ErrorCode::ConfigError,
              "unknown color space: " + std::string(name));
}

Image Image::make(int width, int height, ColorSpace space) {
  Image img;
  img.width = width;
  img.height = height;
  img.channels = space == ColorSpace::Gray ? 1 : 3;
  img.space = space;
  img.data.assign(static_cast<size_t>(width) * height * img.channels, 0.0f);
  return img;
}

Image convert_color(const Image& img, ColorSpace target) {
  if (img.space != ColorSpace::Rgb) {
    throw Error(ErrorCode::ConversionUnsupported,
                std::string("color conversion is defined from RGB only, got ") +
                    color_space_name(img.space));
  }
  if (target == ColorSpace::Gray) {
    throw Error(ErrorCode::ConversionUnsupported,
                "grayscale output goes through to_grayscale()");
  }
  if (target == ColorSpace::Rgb) return img;

  Image out = Image::make(img.width, img.height, target);
  const size_t n = static_cast<size_t>(img.width) * img.height;
  for (size_t i = 0; i < n; ++i) {
    double r = img.data[i * 3 + 0];
    double g = img.data[i * 3 + 1];
    double b = img.data[i * 3 + 2];
    float* dst = &out.data[i * 3];
    switch (target) {
      case ColorSpace::Hsv: rgb_to_hsv(r, g, b, dst); break;
      case ColorSpace::YCbCr: rgb_to_ycbcr(r, g, b, dst); break;
      case ColorSpace::Lab: rgb_to_lab(r, g, b, dst); break;
      default: break;
    }
  }
  return out;
}

Image to_grayscale(const Image& img) {
  if (img.space != ColorSpace::Rgb) {
    throw Error(ErrorCode::ConversionUnsupported,
                "to_grayscale expects an RGB image");
  }
  Image out = Image::make(img.width, img.height, ColorSpace::Gray);
  const size_t n = static_cast<size_t>(img.width) * img.height;
  for (size_t i = 0; i < n; ++i) {
    double y = 0.299 * img.data[i * 3 + 0] + 0.587 * img.data[i * 3 + 1] +
               0.114 * img.data[i * 3 + 2];
    out.data[i] = static_cast<float>(std::round(y));
  }
  return out;
}

Image resize_bilinear(const Image& img, int out_w, int out_h) {
  if (img.empty()) {
    throw Error(ErrorCode::InvalidInput, "resize_bilinear: empty input image");
  }
  if (out_w < 1 || out_h < 1) {
    throw Error(ErrorCode::InvalidInput,
                "resize_bilinear: output dimensions must be >= 1");
  }

  Image out;
  out.width = out_w;
  out.height = out_h;
  out.channels = img.channels;
  out.space = img.space;
  out.data.resize(static_cast<size_t>(out_w) * out_h * img.channels);

  const bool round_output = integral_space(img.space);
  const double sx = static_cast<double>(img.width) / out_w;
  const double sy = static_cast<double>(img.height) / out_h;

  for (int y = 0; y < out_h; ++y) {
    double src_y = (y + 0.5) * sy - 0.5;
    int y0 = static_cast<int>(std::floor(src_y));
    double fy = src_y - y0;
    int y0c = std::clamp(y0, 0, img.height - 1);
    int y1c = std::clamp(y0 + 1, 0, img.height - 1);
    for (int x = 0; x < out_w; ++x) {
      double src_x = (x + 0.5) * sx - 0.5;
      int x0 = static_cast<int>(std::floor(src_x));
      double fx = src_x - x0;
      int x0c = std::clamp(x0, 0, img.width - 1);
      int x1c = std::clamp(x0 + 1, 0, img.width - 1);
      for (int c = 0; c < img.channels; ++c) {
        double v00 = img.at(x0c, y0c, c);
        double v10 = img.at(x1c, y0c, c);
        double v01 = img.at(x0c, y1c, c);
        double v11 = img.at(x1c, y1c, c);
        double top = v00 + (v10 - v00) * fx;
        double bot = v01 + (v11 - v01) * fx;
        double v = top + (bot - top) * fy;
        if (round_output) v = std::floor(v + 0.5);
        out.at(x, y, c) = static_cast<float>(v);
      }
    }
  }
  return out;
}

}  // namespace hemocyte
