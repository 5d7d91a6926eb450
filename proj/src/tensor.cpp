#include "sspb/tensor.hpp"

namespace sspb {

std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(s[i]);
  }
  out += ")";
  return out;
}

std::size_t checked_numel(const Shape& s) {
  if (s.empty()) throw ShapeError("tensor shape must have at least one extent");
  std::size_t n = 1;
  for (std::size_t e : s) {
    if (e == 0) throw ShapeError("tensor extents must be positive, got " + shape_str(s));
    n *= e;
  }
  return n;
}

}  // namespace sspb
