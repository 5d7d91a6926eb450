#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "sspb/error.hpp"

namespace sspb {

// splitmix64 finalizer.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from (seed, a[, b]). Used everywhere a
// sub-task needs its own generator (per-example, per-epoch, per-batch) so
// that outputs do not depend on iteration or worker order.
inline uint64_t derive_seed(uint64_t seed, uint64_t a, uint64_t b = 0) {
  uint64_t h = mix64(seed);
  h = mix64(h ^ a);
  h = mix64(h ^ b);
  return h;
}

// Deterministic uniform generator. mt19937_64 output is pinned by the
// standard; the distribution math is done by hand because the standard
// library distributions are implementation-defined sequences.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // [0, 1)
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n)
  int uniform_int(int n) {
    if (n <= 0) throw ParamError("uniform_int: n must be positive");
    return static_cast<int>(next_u64() % static_cast<uint64_t>(n));
  }

 private:
  std::mt19937_64 engine_;
};

// In-place Fisher-Yates driven by Rng (std::shuffle is not reproducible
// across standard libraries).
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(i)));
    std::swap(v[i - 1], v[j]);
  }
}

// FNV-1a, used for config hashes and golden fingerprints.
inline uint64_t fnv1a64(const void* data, std::size_t n,
                        uint64_t h = 0xcbf29ce484222325ULL) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace sspb
