#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sspb/dataset.hpp"
#include "sspb/metrics.hpp"
#include "sspb/pretext.hpp"
#include "sspb/train.hpp"

namespace sspb {

inline constexpr const char* kToolkitVersion = "0.1.0";
inline constexpr int kReportSchemaVersion = 1;

enum class Regime { kNone, kPatience3, kPatience10 };

const char* regime_name(Regime r);  // "none" | "es3" | "es10"
std::optional<Regime> parse_regime(const std::string& name);

// Human-readable row label mirroring the report table layout,
// e.g. "30 epochs; Early Stopping (patience level: 3)".
std::string regime_label(Regime r, int epochs);

struct DecoderConfig {
  int n_blocks = 3;
  int top_channels = 32;
};

struct DatasetConfig {
  enum class Kind { kSynthetic, kManifest } kind = Kind::kSynthetic;
  // synthetic
  int n_train = 600;
  int n_test = 100;
  double balance = 0.5;
  // manifest
  std::string train_manifest;
  std::string test_manifest;
};

// Full experiment description. Loaded from a strict JSON file: unknown keys
// anywhere are errors, so typos cannot silently fall back to defaults.
struct RunConfig {
  uint64_t seed = 7;
  int image_side = 64;
  int threads = 0;  // 0 = hardware concurrency; SSPB_THREADS caps either way
  EncoderConfig encoder{64, 3, 8, 256};
  DecoderConfig decoder;
  PretextConfig pretext;
  TrainConfig pretext_train;
  TrainConfig classifier_train;
  std::vector<Regime> regimes{Regime::kNone, Regime::kPatience3, Regime::kPatience10};
  DatasetConfig dataset;
  PreprocessParams preprocess;
  SsimParams::Window ssim_window = SsimParams::Window::kGlobal;

  RunConfig();
};

RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

// Canonical serialization with every default materialized; two configs hash
// equal iff this JSON is identical.
nlohmann::json run_config_to_json(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);

// Counts reads of the held-out test set so tests can assert it is touched
// exactly once per consumer, strictly after training.
class TestSetGate {
 public:
  explicit TestSetGate(std::vector<LabeledExample> data) : data_(std::move(data)) {}
  const std::vector<LabeledExample>& read() const {
    reads_.fetch_add(1, std::memory_order_relaxed);
    return data_;
  }
  int reads() const { return reads_.load(std::memory_order_relaxed); }
  std::size_t size() const { return data_.size(); }

 private:
  std::vector<LabeledExample> data_;
  mutable std::atomic<int> reads_{0};
};

// Preprocessed supervised pairs for the classifier (scalar 0/1 targets).
TrainData make_classifier_data(const std::vector<LabeledExample>& examples,
                               const PreprocessParams& params);

// Preprocessed supervised pairs for a pretext dataset (scalar target for
// rotation, preprocessed image target for the reconstruction tasks).
TrainData make_pretext_data(const PretextDataset& ds, const PreprocessParams& params);

ModelSpec build_pretext_model(const RunConfig& cfg, PretextTask task);
ModelSpec build_classifier_model(const RunConfig& cfg);

struct PretextPhaseResult {
  PretextTask task = PretextTask::kRotation;
  ParamSet params;  // trained encoder + task head
  TrainHistory history;
  nlohmann::json metrics;
};

// Trains encoder + task head on pretext pairs from the training images and
// evaluates on pretext pairs generated from the held-out test images (read
// once, after training).
PretextPhaseResult run_pretext_phase(const RunConfig& cfg, PretextTask task,
                                     const std::vector<Image>& train_images,
                                     const TestSetGate& test_gate);

struct CellResult {
  double accuracy = 0.0;
  TrainHistory history;
};

// One Table-1 cell: build classifier, transfer encoder weights when an init
// is given, train under the regime, score thresholded accuracy on the
// untouched test set. The training seed depends on the regime but not the
// init, so rows differ only in initialization.
CellResult run_classification_phase(const RunConfig& cfg, const ParamSet* init, Regime regime,
                                    const std::vector<LabeledExample>& train_examples,
                                    const TestSetGate& test_gate);

struct MatrixResult {
  nlohmann::json report;
  int failed_cells = 0;
  int cells_total = 0;
  int test_set_reads = 0;
};

// Full experiment: three pretext phases (trained once, shared across
// regimes), then the 4-init x |regimes| classification grid. Phase failures
// mark their cells failed and the run continues.
MatrixResult run_matrix(const RunConfig& cfg);

// report.json plus one CSV per table, all written atomically.
void write_report_files(const std::filesystem::path& out_dir, const nlohmann::json& report);

// min(requested or hardware, SSPB_THREADS cap), at least 1.
int resolve_worker_count(int config_threads, std::size_t n_jobs);
void run_jobs(std::vector<std::function<void()>>& jobs, int workers);

std::string iso8601_utc_now();

}  // namespace sspb
