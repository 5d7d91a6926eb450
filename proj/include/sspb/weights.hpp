#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sspb/adam.hpp"

namespace sspb {

inline constexpr uint32_t kWeightFormatVersion = 1;

// Binary parameter file. Layout, all integers little-endian:
//   "SSPW" | u32 version | u32 tensor count
//   per tensor: u32 name length | name bytes (UTF-8) | u32 rank |
//               u32 extent per dimension | f32 data, row-major
// Tensors are written in lexicographic name order, so save -> load -> save
// is byte-identical.
void save_weights(const std::filesystem::path& path, const ParamSet& params);
ParamSet load_weights(const std::filesystem::path& path);

// Serialize to an in-memory byte buffer (used by save_weights and tests).
std::vector<unsigned char> encode_weights(const ParamSet& params);
ParamSet decode_weights(const std::vector<unsigned char>& bytes);

// Shared atomic file write: temp file in the same directory, then rename.
void write_file_atomic(const std::filesystem::path& path, const void* data, std::size_t n);
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace sspb
