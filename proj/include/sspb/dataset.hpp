#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sspb/image.hpp"

namespace sspb {

struct LabeledExample {
  Image image;
  int label = 0;  // 0 benign, 1 melanoma
  std::string source_id;
};

// Reads a CSV with header `filepath,label`. Paths are resolved relative to
// the manifest's directory; labels outside {0, 1}, missing files, or
// unreadable PNGs raise IngestError naming the row.
std::vector<LabeledExample> load_manifest(const std::filesystem::path& manifest_path);

struct SynthConfig {
  int n = 600;
  int side = 64;
  uint64_t seed = 0;
  double balance = 0.5;  // fraction of melanoma-class images
};

// Deterministic two-class image generator: class 0 is a single smooth
// elliptical blob on a skin-toned noisy background; class 1 adds a
// sinusoidally perturbed (irregular) border and a second, bluish color
// region inside the blob. Pixels are integer-valued so PNG round-trips are
// exact. Image i depends only on (seed, i).
std::vector<LabeledExample> generate_synthetic(const SynthConfig& cfg);

// Writes PNGs named `<class>_<index>.png` plus manifest.csv into dir.
void write_labeled_dataset(const std::filesystem::path& dir,
                           const std::vector<LabeledExample>& examples);

inline constexpr const char* kManifestName = "manifest.csv";

}  // namespace sspb
