#include "hemocyte/image_io.hpp"

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "hemocyte/error.hpp"

namespace hemocyte {

namespace {

struct JpegErrorMgr {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  std::longjmp(mgr->jump, 1);
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

Image from_rgb_bytes(int w, int h, const std::vector<unsigned char>& bytes) {
  Image img = Image::make(w, h, ColorSpace::Rgb);
  for (size_t i = 0; i < bytes.size(); ++i) {
    img.data[i] = static_cast<float>(bytes[i]);
  }
  return img;
}

std::vector<unsigned char> to_rgb_bytes(const Image& img) {
  const Image* src = &img;
  Image expanded;
  if (img.space == ColorSpace::Gray) {
    expanded = Image::make(img.width, img.height, ColorSpace::Rgb);
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        float v = img.at(x, y);
        expanded.at(x, y, 0) = v;
        expanded.at(x, y, 1) = v;
        expanded.at(x, y, 2) = v;
      }
    }
    src = &expanded;
  } else if (img.space != ColorSpace::Rgb) {
    throw Error(ErrorCode::InvalidInput,
                "image encoding expects RGB or grayscale samples");
  }
  std::vector<unsigned char> bytes(src->data.size());
  for (size_t i = 0; i < bytes.size(); ++i) {
    float v = src->data[i];
    bytes[i] = static_cast<unsigned char>(v < 0.f ? 0.f : (v > 255.f ? 255.f : v));
  }
  return bytes;
}

Image load_jpeg(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw Error(ErrorCode::IoError, "cannot open " + path.string());

  jpeg_decompress_struct cinfo;
  JpegErrorMgr err;
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = jpeg_error_exit;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw Error(ErrorCode::IoError, "undecodable JPEG: " + path.string());
  }

  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, fp.get());
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);

  const int w = static_cast<int>(cinfo.output_width);
  const int h = static_cast<int>(cinfo.output_height);
  std::vector<unsigned char> bytes(static_cast<size_t>(w) * h * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    unsigned char* row = bytes.data() + static_cast<size_t>(cinfo.output_scanline) * w * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return from_rgb_bytes(w, h, bytes);
}

Image load_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw Error(ErrorCode::IoError, "undecodable PNG: " + path.string());
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<unsigned char> bytes(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, bytes.data(), 0, nullptr)) {
    png_image_free(&image);
    throw Error(ErrorCode::IoError, "undecodable PNG: " + path.string());
  }
  return from_rgb_bytes(static_cast<int>(image.width),
                        static_cast<int>(image.height), bytes);
}

enum class Kind { Jpeg, Png, Other };

Kind sniff(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  unsigned char magic[8] = {0};
  in.read(reinterpret_cast<char*>(magic), sizeof(magic));
  if (in.gcount() >= 2 && magic[0] == 0xFF && magic[1] == 0xD8) return Kind::Jpeg;
  static const unsigned char png_sig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  if (in.gcount() >= 8 && std::memcmp(magic, png_sig, 8) == 0) return Kind::Png;
  return Kind::Other;
}

}  // namespace

bool looks_like_image(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) return false;
  return sniff(path) != Kind::Other;
}

Image load_image_rgb(const std::filesystem::path& path) {
  switch (sniff(path)) {
    case Kind::Jpeg: return load_jpeg(path);
    case Kind::Png: return load_png(path);
    case Kind::Other: {
      std::error_code ec;
      if (!std::filesystem::exists(path, ec))
        throw Error(ErrorCode::IoError, "no such file: " + path.string());
      throw Error(ErrorCode::IoError,
                  "not a JPEG or PNG file: " + path.string());
    }
  }
  throw Error(ErrorCode::IoError, "unreachable");
}

void save_png_rgb(const Image& img, const std::filesystem::path& path) {
  if (img.empty()) throw Error(ErrorCode::InvalidInput, "cannot encode an empty image");
  auto bytes = to_rgb_bytes(img);
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, bytes.data(), 0, nullptr)) {
    throw Error(ErrorCode::IoError, "PNG write failed: " + path.string());
  }
}

void save_jpeg_rgb(const Image& img, const std::filesystem::path& path, int quality) {
  if (img.empty()) throw Error(ErrorCode::InvalidInput, "cannot encode an empty image");
  auto bytes = to_rgb_bytes(img);

  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw Error(ErrorCode::IoError, "cannot open " + path.string());

  jpeg_compress_struct cinfo;
  JpegErrorMgr err;
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = jpeg_error_exit;
  if (setjmp(err.jump)) {
    jpeg_destroy_compress(&cinfo);
    throw Error(ErrorCode::IoError, "JPEG write failed: " + path.string());
  }

  jpeg_create_compress(&cinfo);
  jpeg_stdio_dest(&cinfo, fp.get());
  cinfo.image_width = static_cast<JDIMENSION>(img.width);
  cinfo.image_height = static_cast<JDIMENSION>(img.height);
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  while (cinfo.next_scanline < cinfo.image_height) {
    unsigned char* row = bytes.data() + static_cast<size_t>(cinfo.next_scanline) * img.width * 3;
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
}

}  // namespace hemocyte
