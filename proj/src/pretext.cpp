#include "sspb/pretext.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "sspb/error.hpp"
#include "sspb/png_io.hpp"
#include "sspb/weights.hpp"

namespace sspb {

const char* task_name(PretextTask task) {
  switch (task) {
    case PretextTask::kRotation: return "rotation";
    case PretextTask::kMissingPatch: return "missing_patch";
    case PretextTask::kCorruption: return "corruption";
  }
  return "?";
}

std::optional<PretextTask> parse_task(const std::string& name) {
  if (name == "rotation") return PretextTask::kRotation;
  if (name == "missing_patch" || name == "inpaint") return PretextTask::kMissingPatch;
  if (name == "corruption" || name == "corrupt") return PretextTask::kCorruption;
  return std::nullopt;
}

int resolved_mask_side(const PretextConfig& cfg, int side) {
  if (cfg.mask_side > 0) return cfg.mask_side;
  return static_cast<int>(std::lround(0.33 * side));
}

int resolved_swap_patch(const PretextConfig& cfg, int side) {
  if (cfg.swap_patch > 0) return cfg.swap_patch;
  return static_cast<int>(std::lround(0.134 * side));
}

PretextExample rotation_example(const Image& img, double angle_deg) {
  PretextExample ex;
  ex.task = PretextTask::kRotation;
  ex.input = rotate_image(img, angle_deg);
  ex.target = angle_deg / 360.0;
  return ex;
}

PretextExample gen_rotation_example(const Image& img, Rng& rng) {
  const double angle = rng.uniform() * 360.0;
  return rotation_example(img, angle);
}

PretextExample gen_missing_patch_example(const Image& img, Rng& rng, int mask_side) {
  if (mask_side > std::min(img.height, img.width))
    throw ParamError("mask side " + std::to_string(mask_side) + " exceeds image side");
  PretextExample ex;
  ex.task = PretextTask::kMissingPatch;
  const int top_row = rng.uniform_int(img.height - mask_side + 1);
  const int top_col = rng.uniform_int(img.width - mask_side + 1);
  ex.input = mask_patch(img, top_row, top_col, mask_side);
  ex.target = img;
  return ex;
}

PretextExample gen_corruption_example(const Image& img, Rng& rng, int n_swaps, int patch_side) {
  PretextExample ex;
  ex.task = PretextTask::kCorruption;
  ex.input = corrupt_swap(img, n_swaps, patch_side, rng).first;
  ex.target = img;
  return ex;
}

PretextDataset build_pretext_dataset(const std::vector<Image>& images, PretextTask task,
                                     const PretextConfig& config, uint64_t seed) {
  if (images.empty()) throw UsageError("pretext dataset needs at least one source image");
  PretextDataset ds;
  ds.task = task;
  ds.config = config;
  ds.examples.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Image& img = images[i];
    const uint64_t ex_seed = derive_seed(seed, i);
    Rng rng(ex_seed);
    PretextExample ex;
    switch (task) {
      case PretextTask::kRotation:
        ex = gen_rotation_example(img, rng);
        break;
      case PretextTask::kMissingPatch:
        ex = gen_missing_patch_example(img, rng,
                                       resolved_mask_side(config, std::min(img.height, img.width)));
        break;
      case PretextTask::kCorruption:
        ex = gen_corruption_example(img, rng, config.swap_count,
                                    resolved_swap_patch(config, std::min(img.height, img.width)));
        break;
    }
    ex.seed = ex_seed;
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

void save_pretext_dataset(const std::filesystem::path& dir, const PretextDataset& ds) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ostringstream manifest;
  manifest << "input_path,target,task,seed\n";
  for (std::size_t i = 0; i < ds.examples.size(); ++i) {
    const PretextExample& ex = ds.examples[i];
    const std::string input_name = "input_" + std::to_string(i) + ".png";
    write_png(dir / input_name, ex.input);
    manifest << input_name << ",";
    if (ex.has_image_target()) {
      const std::string target_name = "target_" + std::to_string(i) + ".png";
      write_png(dir / target_name, ex.target_image());
      manifest << target_name;
    } else {
      std::ostringstream label;
      label.precision(17);
      label << ex.label();
      manifest << label.str();
    }
    manifest << "," << task_name(ex.task) << "," << ex.seed << "\n";
  }
  write_file_atomic(dir / kPretextManifestName, manifest.str());
}

PretextDataset load_pretext_dataset(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  const fs::path manifest_path = dir / kPretextManifestName;
  std::ifstream f(manifest_path);
  if (!f) throw IngestError("cannot open pretext manifest " + manifest_path.string());

  std::string line;
  if (!std::getline(f, line) || line != "input_path,target,task,seed")
    throw IngestError("pretext manifest header mismatch in " + manifest_path.string());

  PretextDataset ds;
  bool first = true;
  std::size_t row = 0;
  while (std::getline(f, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string input_path, target, task_str, seed_str;
    if (!std::getline(ss, input_path, ',') || !std::getline(ss, target, ',') ||
        !std::getline(ss, task_str, ',') || !std::getline(ss, seed_str))
      throw IngestError("pretext manifest row " + std::to_string(row) + " malformed");
    auto task = parse_task(task_str);
    if (!task) throw IngestError("pretext manifest row " + std::to_string(row) +
                                 ": unknown task '" + task_str + "'");
    if (first) {
      ds.task = *task;
      first = false;
    } else if (*task != ds.task) {
      throw IngestError("pretext manifest row " + std::to_string(row) +
                        ": mixed tasks in one dataset");
    }
    PretextExample ex;
    ex.task = *task;
    ex.input = read_png(dir / input_path);
    if (*task == PretextTask::kRotation) {
      ex.target = std::stod(target);
    } else {
      ex.target = read_png(dir / target);
    }
    ex.seed = std::stoull(seed_str);
    ds.examples.push_back(std::move(ex));
  }
  if (ds.examples.empty())
    throw UsageError("pretext manifest " + manifest_path.string() + " lists no examples");
  return ds;
}

}  // namespace sspb
