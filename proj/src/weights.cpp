#include "sspb/weights.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "sspb/error.hpp"

namespace sspb {

namespace {

void put_u32(std::vector<unsigned char>& out, uint32_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

uint32_t get_u32(const std::vector<unsigned char>& in, std::size_t& pos) {
  if (pos + 4 > in.size()) throw IngestError("weight file truncated");
  uint32_t v = static_cast<uint32_t>(in[pos]) | (static_cast<uint32_t>(in[pos + 1]) << 8) |
               (static_cast<uint32_t>(in[pos + 2]) << 16) |
               (static_cast<uint32_t>(in[pos + 3]) << 24);
  pos += 4;
  return v;
}

}  // namespace

std::vector<unsigned char> encode_weights(const ParamSet& params) {
  std::vector<unsigned char> out;
  out.push_back('S');
  out.push_back('S');
  out.push_back('P');
  out.push_back('W');
  put_u32(out, kWeightFormatVersion);
  put_u32(out, static_cast<uint32_t>(params.size()));
  for (const auto& [name, t] : params) {  // std::map iterates in name order
    put_u32(out, static_cast<uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put_u32(out, static_cast<uint32_t>(t.rank()));
    for (std::size_t e : t.shape) put_u32(out, static_cast<uint32_t>(e));
    for (float v : t.data) put_u32(out, std::bit_cast<uint32_t>(v));
  }
  return out;
}

ParamSet decode_weights(const std::vector<unsigned char>& bytes) {
  std::size_t pos = 0;
  if (bytes.size() < 4 || bytes[0] != 'S' || bytes[1] != 'S' || bytes[2] != 'P' ||
      bytes[3] != 'W')
    throw IngestError("weight file magic mismatch (expected SSPW)");
  pos = 4;
  const uint32_t version = get_u32(bytes, pos);
  if (version != kWeightFormatVersion)
    throw IngestError("unsupported weight file version " + std::to_string(version));
  const uint32_t count = get_u32(bytes, pos);
  ParamSet params;
  for (uint32_t i = 0; i < count; ++i) {
    const uint32_t name_len = get_u32(bytes, pos);
    if (pos + name_len > bytes.size()) throw IngestError("weight file truncated in name");
    std::string name(reinterpret_cast<const char*>(&bytes[pos]), name_len);
    pos += name_len;
    const uint32_t rank = get_u32(bytes, pos);
    Shape shape(rank);
    for (uint32_t d = 0; d < rank; ++d) shape[d] = get_u32(bytes, pos);
    const std::size_t n = checked_numel(shape);
    std::vector<float> data(n);
    for (std::size_t k = 0; k < n; ++k) data[k] = std::bit_cast<float>(get_u32(bytes, pos));
    if (!params.emplace(name, Tensor(std::move(shape), std::move(data))).second)
      throw IngestError("duplicate tensor name '" + name + "' in weight file");
  }
  if (pos != bytes.size()) throw IngestError("trailing bytes in weight file");
  return params;
}

void write_file_atomic(const std::filesystem::path& path, const void* data, std::size_t n) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IngestError("cannot open " + tmp.string() + " for writing");
    f.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!f) throw IngestError("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, text.data(), text.size());
}

void save_weights(const std::filesystem::path& path, const ParamSet& params) {
  const auto bytes = encode_weights(params);
  write_file_atomic(path, bytes.data(), bytes.size());
}

ParamSet load_weights(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IngestError("cannot open weight file " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
  return decode_weights(bytes);
}

}  // namespace sspb
