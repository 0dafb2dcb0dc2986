#pragma once

#include <cassert>
#include <string_view>
#include <vector>

namespace hemocyte {

enum class ColorSpace { Rgb, Hsv, YCbCr, Lab, Gray };

const char* color_space_name(ColorSpace space);
ColorSpace color_space_from_name(std::string_view name);

/// Row-major interleaved raster. Sample conventions per space:
///   Rgb, YCbCr, Gray : integral values in [0, 255]
///   Hsv              : H in degrees [0, 360), S and V in [0, 1]
///   Lab              : L in [0, 100], a/b signed floats
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  ColorSpace space = ColorSpace::Rgb;
  std::vector<float> data;

  static Image make(int width, int height, ColorSpace space);

  bool empty() const { return width <= 0 || height <= 0 || data.empty(); }

  float at(int x, int y, int c = 0) const {
    assert(x >= 0 && x < width && y >= 0 && y < height && c < channels);
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  float& at(int x, int y, int c = 0) {
    assert(x >= 0 && x < width && y >= 0 && y < height && c < channels);
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
};

/// Converts an RGB image to `target`. RGB -> RGB is the identity.
/// Grayscale is not a valid target here; use to_grayscale().
Image convert_color(const Image& img, ColorSpace target);

/// ITU-R 601 luma: round(0.299 R + 0.587 G + 0.114 B) per pixel.
Image to_grayscale(const Image& img);

/// Bilinear resampling with half-pixel-center alignment; source coordinates
/// clamp at the borders. Integral spaces round half up.
Image resize_bilinear(const Image& img, int out_w, int out_h);

}  // namespace hemocyte
