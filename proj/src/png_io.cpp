#include "sspb/png_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include "sspb/error.hpp"

namespace sspb {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

Image read_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IngestError("cannot open PNG " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IngestError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IngestError("png_create_info_struct failed");
  }
  std::vector<png_bytep> row_ptrs;
  std::vector<unsigned char> raster;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IngestError("libpng failed reading " + path.string());
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);

  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  raster.resize(stride * h);
  row_ptrs.resize(h);
  for (png_uint_32 r = 0; r < h; ++r) row_ptrs[r] = raster.data() + r * stride;
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Image img(static_cast<int>(h), static_cast<int>(w));
  for (png_uint_32 r = 0; r < h; ++r) {
    const unsigned char* row = raster.data() + r * stride;
    for (png_uint_32 c = 0; c < w; ++c)
      for (int ch = 0; ch < 3; ++ch)
        img.at(static_cast<int>(r), static_cast<int>(c), ch) =
            static_cast<double>(row[c * 3 + ch]);
  }
  return img;
}

void write_png(const std::filesystem::path& path, const Image& img) {
  if (img.order != ChannelOrder::kRgb)
    throw UsageError("write_png expects a canonical RGB image; deprocess first");
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";

  std::vector<unsigned char> raster(static_cast<std::size_t>(img.height) * img.width * 3);
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c)
      for (int ch = 0; ch < 3; ++ch) {
        double v = std::lround(img.at(r, c, ch));
        if (v < 0) v = 0;
        if (v > 255) v = 255;
        raster[(static_cast<std::size_t>(r) * img.width + c) * 3 + ch] =
            static_cast<unsigned char>(v);
      }

  {
    FilePtr fp(std::fopen(tmp.c_str(), "wb"));
    if (!fp) throw IngestError("cannot open " + tmp.string() + " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IngestError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
      png_destroy_write_struct(&png, nullptr);
      throw IngestError("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
      png_destroy_write_struct(&png, &info);
      throw IngestError("libpng failed writing " + tmp.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> row_ptrs(img.height);
    for (int r = 0; r < img.height; ++r)
      row_ptrs[r] = raster.data() + static_cast<std::size_t>(r) * img.width * 3;
    png_write_image(png, row_ptrs.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
  }
  fs::rename(tmp, path);
}

}  // namespace sspb
