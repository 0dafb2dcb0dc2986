#pragma once

#include <filesystem>

#include "hemocyte/image.hpp"

namespace hemocyte {

/// Decodes a JPEG or PNG file (sniffed by magic bytes) into an 8-bit RGB
/// image. Grayscale and paletted sources are expanded to RGB.
Image load_image_rgb(const std::filesystem::path& path);

/// Returns false if the file does not start with a JPEG or PNG signature.
bool looks_like_image(const std::filesystem::path& path);

void save_png_rgb(const Image& img, const std::filesystem::path& path);
void save_jpeg_rgb(const Image& img, const std::filesystem::path& path,
                   int quality = 92);

}  // namespace hemocyte
