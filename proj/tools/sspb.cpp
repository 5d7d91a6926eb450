// sspb: experiment CLI for the self-supervised pretraining benchmark.
//
// Commands cover the full pipeline: synthetic data generation, pretext pair
// generation, pretext pretraining, classifier training with optional encoder
// initialization, standalone evaluation, and the full 4-init x regime
// experiment matrix. All artifacts are written atomically; failures print a
// machine-readable JSON error line on stderr and exit nonzero.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "sspb/harness.hpp"
#include "sspb/png_io.hpp"
#include "sspb/weights.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void apply_seed_override(sspb::RunConfig& cfg, const std::optional<uint64_t>& seed) {
  if (seed) cfg.seed = *seed;
}

sspb::PretextTask require_task(const std::string& name) {
  auto task = sspb::parse_task(name);
  if (!task)
    throw sspb::UsageError("unknown task '" + name + "' (expected rotation|inpaint|corrupt)");
  return *task;
}

sspb::Regime require_regime(const std::string& name) {
  auto regime = sspb::parse_regime(name);
  if (!regime)
    throw sspb::UsageError("unknown regime '" + name + "' (expected none|es3|es10)");
  return *regime;
}

int cmd_synth(int n, int size, uint64_t seed, const std::string& out) {
  sspb::SynthConfig cfg;
  cfg.n = n;
  cfg.side = size;
  cfg.seed = seed;
  const auto examples = sspb::generate_synthetic(cfg);
  sspb::write_labeled_dataset(out, examples);
  std::printf("wrote %zu images and %s to %s\n", examples.size(), sspb::kManifestName,
              out.c_str());
  return 0;
}

int cmd_gen(const std::string& task_name, const std::string& manifest, uint64_t seed,
            const std::string& out, int mask_side, int swaps, int swap_patch) {
  const sspb::PretextTask task = require_task(task_name);
  const auto labeled = sspb::load_manifest(manifest);
  std::vector<sspb::Image> images;
  images.reserve(labeled.size());
  for (const auto& ex : labeled) images.push_back(ex.image);
  sspb::PretextConfig cfg;
  cfg.mask_side = mask_side;
  cfg.swap_count = swaps;
  cfg.swap_patch = swap_patch;
  const auto ds = sspb::build_pretext_dataset(images, task, cfg, seed);
  sspb::save_pretext_dataset(out, ds);
  std::printf("wrote %zu %s examples to %s\n", ds.examples.size(), sspb::task_name(task),
              out.c_str());
  return 0;
}

int cmd_pretrain(const std::string& task_name, const std::string& data,
                 const std::string& config, const std::string& out,
                 const std::optional<uint64_t>& seed) {
  const sspb::PretextTask task = require_task(task_name);
  sspb::RunConfig cfg = sspb::load_run_config(config);
  apply_seed_override(cfg, seed);

  const auto ds = sspb::load_pretext_dataset(data);
  if (ds.task != task)
    throw sspb::UsageError(std::string("dataset in ") + data + " holds task '" +
                           sspb::task_name(ds.task) + "', not '" + sspb::task_name(task) + "'");
  for (const auto& ex : ds.examples)
    if (ex.input.height != cfg.image_side || ex.input.width != cfg.image_side)
      throw sspb::ConfigError("pretext images do not match config image_side " +
                              std::to_string(cfg.image_side));

  const sspb::ModelSpec model = sspb::build_pretext_model(cfg, task);
  sspb::ParamSet params = sspb::init_params(
      model, sspb::derive_seed(cfg.seed, sspb::fnv1a64("pretrain-init", 13)));
  sspb::TrainConfig tc = cfg.pretext_train;
  tc.seed = sspb::derive_seed(cfg.seed, sspb::fnv1a64("pretrain", 8));
  tc.loss = sspb::LossKind::kMse;

  const sspb::TrainData train_data = sspb::make_pretext_data(ds, cfg.preprocess);
  auto [trained, history] = sspb::train(model, std::move(params), train_data, tc);
  sspb::save_weights(out, trained);
  sspb::write_history_csv(fs::path(out).string() + ".history.csv", history);
  std::printf("pretrained %s for %d epochs (best val loss %.6g); weights at %s\n",
              sspb::task_name(task), history.stopped_epoch, history.best_val_loss, out.c_str());
  return 0;
}

int cmd_train(const std::string& init, const std::string& data, const std::string& config,
              const std::string& regime_name, const std::string& out,
              const std::optional<uint64_t>& seed) {
  const sspb::Regime regime = require_regime(regime_name);
  sspb::RunConfig cfg = sspb::load_run_config(config);
  apply_seed_override(cfg, seed);

  const auto examples = sspb::load_manifest(fs::path(data) / sspb::kManifestName);
  for (const auto& ex : examples)
    if (ex.image.height != cfg.image_side || ex.image.width != cfg.image_side)
      throw sspb::ConfigError("training images do not match config image_side " +
                              std::to_string(cfg.image_side));

  const sspb::ModelSpec model = sspb::build_classifier_model(cfg);
  const uint64_t init_seed = sspb::derive_seed(cfg.seed, sspb::fnv1a64("train-init", 10));
  sspb::ParamSet params;
  if (init == "random") {
    params = sspb::init_params(model, init_seed);
  } else {
    params = sspb::transfer_encoder_weights(sspb::load_weights(init), model, init_seed);
  }

  sspb::TrainConfig tc = cfg.classifier_train;
  tc.seed = sspb::derive_seed(cfg.seed, sspb::fnv1a64("train", 5));
  if (regime == sspb::Regime::kNone) {
    tc.early_stopping.enabled = false;
  } else {
    tc.early_stopping.enabled = true;
    tc.early_stopping.patience = regime == sspb::Regime::kPatience3 ? 3 : 10;
  }

  const sspb::TrainData train_data = sspb::make_classifier_data(examples, cfg.preprocess);
  auto [trained, history] = sspb::train(model, std::move(params), train_data, tc);

  fs::create_directories(out);
  sspb::save_weights(fs::path(out) / "weights.sspw", trained);
  sspb::write_history_csv(fs::path(out) / "history.csv", history);
  json model_json = {
      {"version", sspb::kToolkitVersion},
      {"image_side", cfg.image_side},
      {"encoder",
       {{"n_stages", cfg.encoder.n_stages},
        {"base_channels", cfg.encoder.base_channels},
        {"channel_cap", cfg.encoder.channel_cap}}},
      {"preprocess_means_bgr",
       {cfg.preprocess.mean_b, cfg.preprocess.mean_g, cfg.preprocess.mean_r}},
      {"threshold", 0.5},
      {"init", init == "random" ? "random" : "weights"},
      {"regime", sspb::regime_name(regime)},
      {"epochs_run", history.stopped_epoch},
      {"best_epoch", history.best_epoch},
  };
  sspb::write_file_atomic(fs::path(out) / "model.json", model_json.dump(2) + "\n");
  std::printf("trained classifier for %d epochs (best val loss %.6g); model dir %s\n",
              history.stopped_epoch, history.best_val_loss, out.c_str());
  return 0;
}

int cmd_eval(const std::string& model_dir, const std::string& manifest,
             const std::string& report_path) {
  std::ifstream mf(fs::path(model_dir) / "model.json");
  if (!mf) throw sspb::IngestError("cannot open " + model_dir + "/model.json");
  json model_json;
  mf >> model_json;

  sspb::EncoderConfig enc;
  enc.input_side = model_json.at("image_side").get<int>();
  enc.n_stages = model_json.at("encoder").at("n_stages").get<int>();
  enc.base_channels = model_json.at("encoder").at("base_channels").get<int>();
  enc.channel_cap = model_json.at("encoder").at("channel_cap").get<int>();
  sspb::PreprocessParams pp;
  pp.mean_b = model_json.at("preprocess_means_bgr").at(0).get<double>();
  pp.mean_g = model_json.at("preprocess_means_bgr").at(1).get<double>();
  pp.mean_r = model_json.at("preprocess_means_bgr").at(2).get<double>();
  const double threshold = model_json.at("threshold").get<double>();

  const sspb::ModelSpec encoder = sspb::build_encoder(enc);
  const sspb::ModelSpec model =
      sspb::chain(encoder, sspb::build_classifier_head(encoder.output_shape));
  const sspb::ParamSet params = sspb::load_weights(fs::path(model_dir) / "weights.sspw");

  const auto examples = sspb::load_manifest(manifest);
  sspb::ScalarBatch batch;
  for (const auto& ex : examples) {
    if (ex.image.height != enc.input_side || ex.image.width != enc.input_side)
      throw sspb::IngestError("image " + ex.source_id + " does not match model input side");
    const sspb::Tensor in = sspb::image_to_tensor(sspb::preprocess(ex.image, pp));
    const sspb::Tensor out = sspb::forward_eval(model, params, in);
    batch.y.push_back(static_cast<double>(ex.label));
    batch.y_hat.push_back(static_cast<double>(out.data[0]));
  }
  const double acc = sspb::accuracy_pct(batch, threshold);

  json report = {{"schema_version", sspb::kReportSchemaVersion},
                 {"accuracy_pct", acc},
                 {"n_test", examples.size()},
                 {"threshold", threshold},
                 {"model_dir", model_dir},
                 {"manifest", manifest},
                 {"version", sspb::kToolkitVersion}};
  sspb::write_file_atomic(report_path, report.dump(2) + "\n");
  std::printf("accuracy %.4f%% on %zu images; report at %s\n", acc, examples.size(),
              report_path.c_str());
  return 0;
}

int cmd_matrix(const std::string& config, const std::string& out,
               const std::optional<uint64_t>& seed) {
  sspb::RunConfig cfg = sspb::load_run_config(config);
  apply_seed_override(cfg, seed);
  const sspb::MatrixResult result = sspb::run_matrix(cfg);
  sspb::write_report_files(out, result.report);
  std::printf("matrix complete: %d/%d cells ok; report files in %s\n",
              result.cells_total - result.failed_cells, result.cells_total, out.c_str());
  if (result.failed_cells > 0) {
    std::fprintf(stderr, "{\"error\":{\"kind\":\"cell\",\"message\":\"%d cell(s) failed\"}}\n",
                 result.failed_cells);
    return 3;
  }
  return 0;
}

std::string json_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\')
      out += std::string("\\") + c;
    else if (c == '\n')
      out += "\\n";
    else
      out += c;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"self-supervised pretraining benchmark"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic labeled image dataset");
  int synth_n = 600, synth_size = 64;
  uint64_t synth_seed = 0;
  std::string synth_out;
  synth->add_option("--n", synth_n, "number of images")->required();
  synth->add_option("--size", synth_size, "image side in pixels")->required();
  synth->add_option("--seed", synth_seed, "generation seed")->required();
  synth->add_option("--out", synth_out, "output directory")->required();

  // gen
  auto* gen = app.add_subcommand("gen", "generate pretext training pairs from a manifest");
  std::string gen_task, gen_manifest, gen_out;
  uint64_t gen_seed = 0;
  int gen_mask_side = 0, gen_swaps = 100, gen_swap_patch = 0;
  gen->add_option("--task", gen_task, "rotation|inpaint|corrupt")->required();
  gen->add_option("--manifest", gen_manifest, "source image manifest CSV")->required();
  gen->add_option("--seed", gen_seed, "generation seed")->required();
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--mask-side", gen_mask_side, "mask side in pixels (0 = scale with image)");
  gen->add_option("--swaps", gen_swaps, "number of patch swaps");
  gen->add_option("--swap-patch", gen_swap_patch, "swap patch side (0 = scale with image)");

  // pretrain
  auto* pretrain = app.add_subcommand("pretrain", "train a pretext model, save its weights");
  std::string pre_task, pre_data, pre_config, pre_out;
  std::optional<uint64_t> pre_seed;
  pretrain->add_option("--task", pre_task, "rotation|inpaint|corrupt")->required();
  pretrain->add_option("--data", pre_data, "pretext dataset directory")->required();
  pretrain->add_option("--config", pre_config, "run config JSON")->required();
  pretrain->add_option("--out", pre_out, "output weight file")->required();
  pretrain->add_option("--seed", pre_seed, "override the config seed");

  // train
  auto* train_cmd = app.add_subcommand("train", "train the melanoma classifier");
  std::string tr_init, tr_data, tr_config, tr_regime, tr_out;
  std::optional<uint64_t> tr_seed;
  train_cmd->add_option("--init", tr_init, "pretext weight file or 'random'")->required();
  train_cmd->add_option("--data", tr_data, "labeled dataset directory")->required();
  train_cmd->add_option("--config", tr_config, "run config JSON")->required();
  train_cmd->add_option("--regime", tr_regime, "none|es3|es10")->required();
  train_cmd->add_option("--out", tr_out, "output model directory")->required();
  train_cmd->add_option("--seed", tr_seed, "override the config seed");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a trained classifier");
  std::string ev_model, ev_manifest, ev_report;
  eval_cmd->add_option("--model", ev_model, "model directory from 'train'")->required();
  eval_cmd->add_option("--manifest", ev_manifest, "test manifest CSV")->required();
  eval_cmd->add_option("--report", ev_report, "output report JSON")->required();

  // matrix
  auto* matrix = app.add_subcommand("matrix", "run the full init x regime experiment matrix");
  std::string mx_config, mx_out;
  std::optional<uint64_t> mx_seed;
  matrix->add_option("--config", mx_config, "run config JSON")->required();
  matrix->add_option("--out", mx_out, "output report directory")->required();
  matrix->add_option("--seed", mx_seed, "override the config seed");

  try {
    app.parse(argc, argv);
    if (*synth) return cmd_synth(synth_n, synth_size, synth_seed, synth_out);
    if (*gen)
      return cmd_gen(gen_task, gen_manifest, gen_seed, gen_out, gen_mask_side, gen_swaps,
                     gen_swap_patch);
    if (*pretrain) return cmd_pretrain(pre_task, pre_data, pre_config, pre_out, pre_seed);
    if (*train_cmd) return cmd_train(tr_init, tr_data, tr_config, tr_regime, tr_out, tr_seed);
    if (*eval_cmd) return cmd_eval(ev_model, ev_manifest, ev_report);
    if (*matrix) return cmd_matrix(mx_config, mx_out, mx_seed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code != 0)
      std::fprintf(stderr, "{\"error\":{\"kind\":\"usage\",\"message\":\"%s\"}}\n",
                   json_escape(e.what()).c_str());
    return code;
  } catch (const sspb::Error& e) {
    std::fprintf(stderr, "{\"error\":{\"kind\":\"%s\",\"message\":\"%s\"}}\n", e.kind().c_str(),
                 json_escape(e.what()).c_str());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "{\"error\":{\"kind\":\"internal\",\"message\":\"%s\"}}\n",
                 json_escape(e.what()).c_str());
    return 2;
  }
  return 0;
}
