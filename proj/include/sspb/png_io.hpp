#pragma once

#include <filesystem>

#include "sspb/image.hpp"

namespace sspb {

// Reads any PNG as 8-bit RGB (palette/gray expanded, alpha stripped,
// 16-bit narrowed). Pixel values come back as exact integers in [0, 255].
Image read_png(const std::filesystem::path& path);

// Writes a canonical RGB image as 8-bit RGB PNG, rounding and clamping to
// [0, 255]. The file is written atomically (temp + rename).
void write_png(const std::filesystem::path& path, const Image& img);

}  // namespace sspb
