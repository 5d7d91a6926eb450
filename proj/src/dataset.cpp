#include "sspb/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sspb/error.hpp"
#include "sspb/png_io.hpp"
#include "sspb/weights.hpp"

namespace sspb {

std::vector<LabeledExample> load_manifest(const std::filesystem::path& manifest_path) {
  std::ifstream f(manifest_path);
  if (!f) throw IngestError("cannot open manifest " + manifest_path.string());
  const std::filesystem::path base = manifest_path.parent_path();

  std::string line;
  if (!std::getline(f, line)) throw UsageError("manifest " + manifest_path.string() + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "filepath,label")
    throw IngestError("manifest header must be 'filepath,label', got '" + line + "'");

  std::vector<LabeledExample> examples;
  std::size_t row = 0;
  while (std::getline(f, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos)
      throw IngestError("manifest row " + std::to_string(row) + ": missing comma");
    const std::string filepath = line.substr(0, comma);
    const std::string label_str = line.substr(comma + 1);
    if (label_str != "0" && label_str != "1")
      throw IngestError("manifest row " + std::to_string(row) + ": label must be 0 or 1, got '" +
                        label_str + "'");
    LabeledExample ex;
    ex.label = label_str == "1" ? 1 : 0;
    const std::filesystem::path img_path =
        std::filesystem::path(filepath).is_absolute() ? std::filesystem::path(filepath)
                                                      : base / filepath;
    ex.source_id = img_path.string();  // resolved, so ids are unique across directories
    try {
      ex.image = read_png(img_path);
    } catch (const Error& e) {
      throw IngestError("manifest row " + std::to_string(row) + ": " + e.what());
    }
    examples.push_back(std::move(ex));
  }
  if (examples.empty())
    throw UsageError("manifest " + manifest_path.string() + " lists no images");
  return examples;
}

namespace {

double smoothstep01(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return t * t * (3.0 - 2.0 * t);
}

struct Blob {
  double cx, cy;      // center, pixels
  double rx, ry;      // radii, pixels
  double rot;         // orientation, radians
  double amp = 0.0;   // border perturbation amplitude (fraction of radius)
  int lobes = 0;
  double phase = 0.0;
  double edge_px = 1.5;  // anti-aliasing half-width of the boundary
  double color[3];

  double radial(double x, double y) const {
    const double dx = x - cx, dy = y - cy;
    const double u = (std::cos(rot) * dx + std::sin(rot) * dy) / rx;
    const double v = (-std::sin(rot) * dx + std::cos(rot) * dy) / ry;
    return std::sqrt(u * u + v * v);
  }

  // Soft coverage in [0, 1]; ~1.5 px anti-aliased edge.
  double coverage(double x, double y) const {
    const double dx = x - cx, dy = y - cy;
    const double u = (std::cos(rot) * dx + std::sin(rot) * dy) / rx;
    const double v = (-std::sin(rot) * dx + std::cos(rot) * dy) / ry;
    const double rho = std::sqrt(u * u + v * v);
    double boundary = 1.0;
    if (lobes > 0) boundary += amp * std::sin(lobes * std::atan2(v, u) + phase);
    const double r_px = 0.5 * (rx + ry);
    const double dist = (boundary - rho) * r_px;  // >0 inside, in approx. pixels
    return smoothstep01(dist / edge_px + 0.5);
  }
};

Image synth_image(int side, int label, Rng& rng) {
  // Background: skin tone; brightness varies per image, channel ratios stay
  // nearly fixed so class separation is not drowned by background tint.
  const double tint = rng.uniform(-1.0, 1.0);
  double bg[3] = {225.0 + 12.0 * tint + rng.uniform(-1.5, 1.5),
                  196.0 + 11.0 * tint + rng.uniform(-1.5, 1.5),
                  172.0 + 10.0 * tint + rng.uniform(-1.5, 1.5)};
  const double grad_amp = rng.uniform(-8.0, 8.0);
  const double grad_dir = rng.uniform(0.0, 2.0 * 3.14159265358979323846);

  Blob lesion{};
  lesion.cx = rng.uniform(0.38, 0.62) * side;
  lesion.cy = rng.uniform(0.38, 0.62) * side;
  lesion.rx = rng.uniform(0.16, 0.27) * side;
  lesion.ry = rng.uniform(0.16, 0.27) * side;
  lesion.rot = rng.uniform(0.0, 3.14159265358979323846);
  const double shade = rng.uniform(-1.0, 1.0);
  lesion.color[0] = 126.0 + 14.0 * shade + rng.uniform(-3.0, 3.0);
  lesion.color[1] = 80.0 + 11.0 * shade + rng.uniform(-3.0, 3.0);
  lesion.color[2] = 62.0 + 9.0 * shade + rng.uniform(-3.0, 3.0);

  // both classes: smooth radial shading toward a darker, slightly bluer
  // center, so a bluish interior alone does not give class 1 away
  const double shade_depth = rng.uniform(5.0, 30.0);
  const double shade_blue = rng.uniform(0.0, 25.0);

  Blob second{};
  if (label == 1) {
    lesion.amp = rng.uniform(0.08, 0.24);
    lesion.lobes = 5 + rng.uniform_int(5);
    lesion.phase = rng.uniform(0.0, 2.0 * 3.14159265358979323846);

    const double off = rng.uniform(0.0, 0.25);
    const double psi = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    second.cx = lesion.cx + off * lesion.rx * std::cos(psi);
    second.cy = lesion.cy + off * lesion.ry * std::sin(psi);
    second.rx = rng.uniform(0.36, 0.55) * lesion.rx;
    second.ry = rng.uniform(0.36, 0.55) * lesion.ry;
    second.rot = lesion.rot;
    // soft-edged: blends into the radial shading both classes carry, so the
    // class boundary is a magnitude judgment, not an edge detection
    second.edge_px = rng.uniform(2.5, 6.0);
    second.color[0] = 60.0 + rng.uniform(-5.0, 5.0);
    second.color[1] = 64.0 + rng.uniform(-5.0, 5.0);
    second.color[2] = rng.uniform(100.0, 135.0);
  }

  Image img(side, side);
  const double gx = std::cos(grad_dir), gy = std::sin(grad_dir);
  for (int r = 0; r < side; ++r)
    for (int c = 0; c < side; ++c) {
      const double ramp =
          grad_amp * ((c * gx + r * gy) / side - 0.5 * (gx + gy));
      const double cov = lesion.coverage(c, r);
      const double cov2 = label == 1 ? second.coverage(c, r) * cov : 0.0;
      const double rho = lesion.radial(c, r);
      const double center = rho < 1.0 ? (1.0 - rho) * (1.0 - rho) : 0.0;
      for (int ch = 0; ch < 3; ++ch) {
        double lesion_v = lesion.color[ch] - shade_depth * center;
        if (ch == 2) lesion_v += shade_blue * center;
        double v = bg[ch] + ramp;
        v = v * (1.0 - cov) + lesion_v * cov;
        v = v * (1.0 - cov2) + second.color[ch] * cov2;
        v += rng.uniform(-20.0, 20.0);
        v = std::round(v);
        if (v < 0.0) v = 0.0;
        if (v > 255.0) v = 255.0;
        img.at(r, c, ch) = v;
      }
    }
  return img;
}

}  // namespace

std::vector<LabeledExample> generate_synthetic(const SynthConfig& cfg) {
  if (cfg.n < 2) throw ConfigError("synthetic dataset needs n >= 2");
  if (cfg.side < 16) throw ConfigError("synthetic image side must be >= 16");
  if (!(cfg.balance >= 0.0 && cfg.balance <= 1.0))
    throw ConfigError("class balance must lie in [0, 1]");

  std::vector<LabeledExample> examples;
  examples.reserve(static_cast<std::size_t>(cfg.n));
  for (int i = 0; i < cfg.n; ++i) {
    // Bresenham-style schedule: exactly floor(n * balance) melanoma images,
    // spread evenly through the sequence.
    const int label = static_cast<int>(std::floor((i + 1) * cfg.balance) -
                                       std::floor(i * cfg.balance));
    Rng rng(derive_seed(cfg.seed, static_cast<uint64_t>(i)));
    LabeledExample ex;
    ex.label = label;
    ex.image = synth_image(cfg.side, label, rng);
    // seed-salted so that independently generated sets never share an id
    char salt[24];
    std::snprintf(salt, sizeof salt, "%016llx", static_cast<unsigned long long>(cfg.seed));
    ex.source_id = std::string(salt) + "/" + std::to_string(label) + "_" + std::to_string(i);
    examples.push_back(std::move(ex));
  }
  return examples;
}

void write_labeled_dataset(const std::filesystem::path& dir,
                           const std::vector<LabeledExample>& examples) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ostringstream manifest;
  manifest << "filepath,label\n";
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const LabeledExample& ex = examples[i];
    const std::string name = std::to_string(ex.label) + "_" + std::to_string(i) + ".png";
    write_png(dir / name, ex.image);
    manifest << name << "," << ex.label << "\n";
  }
  write_file_atomic(dir / kManifestName, manifest.str());
}

}  // namespace sspb
