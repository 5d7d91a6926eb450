#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sspb/image.hpp"

namespace sspb {

enum class PretextTask { kRotation, kMissingPatch, kCorruption };

const char* task_name(PretextTask task);
std::optional<PretextTask> parse_task(const std::string& name);

// One supervised pair for a pretext task. Rotation targets are the angle
// scaled to [0, 1); image tasks carry the unmodified original as target.
struct PretextExample {
  Image input;
  std::variant<double, Image> target;
  PretextTask task = PretextTask::kRotation;
  uint64_t seed = 0;

  double label() const { return std::get<double>(target); }
  const Image& target_image() const { return std::get<Image>(target); }
  bool has_image_target() const { return std::holds_alternative<Image>(target); }
};

// Zero values mean "scale with image side": mask_side = round(0.33 S),
// swap_patch = round(0.134 S). Absolute pixel values are accepted as-is.
struct PretextConfig {
  int mask_side = 0;
  int swap_count = 100;
  int swap_patch = 0;
};

int resolved_mask_side(const PretextConfig& cfg, int side);
int resolved_swap_patch(const PretextConfig& cfg, int side);

// Deterministic-angle variant; the random generator calls this with
// angle ~ Uniform[0, 360).
PretextExample rotation_example(const Image& img, double angle_deg);

PretextExample gen_rotation_example(const Image& img, Rng& rng);
PretextExample gen_missing_patch_example(const Image& img, Rng& rng, int mask_side);
PretextExample gen_corruption_example(const Image& img, Rng& rng, int n_swaps, int patch_side);

struct PretextDataset {
  PretextTask task = PretextTask::kRotation;
  PretextConfig config;
  std::vector<PretextExample> examples;
};

// One example per source image. Example i draws from an independent stream
// seeded by derive_seed(seed, i), so results do not depend on generation
// order or worker count.
PretextDataset build_pretext_dataset(const std::vector<Image>& images, PretextTask task,
                                     const PretextConfig& config, uint64_t seed);

// Writes input PNGs (plus target PNGs for image tasks) and a manifest CSV
// with header input_path,target,task,seed. `target` is a number for
// rotation and a path for the image tasks.
void save_pretext_dataset(const std::filesystem::path& dir, const PretextDataset& ds);
PretextDataset load_pretext_dataset(const std::filesystem::path& dir);

inline constexpr const char* kPretextManifestName = "pretext_manifest.csv";

}  // namespace sspb
