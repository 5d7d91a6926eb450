#include "sspb/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>
#include <thread>

#include "sspb/weights.hpp"

namespace sspb {

using nlohmann::json;

namespace {
// derived-seed stream tags
constexpr uint64_t kPretextGenStream = 1;
constexpr uint64_t kPretextInitStream = 2;
constexpr uint64_t kPretextTrainStream = 3;
constexpr uint64_t kPretextEvalStream = 4;
constexpr uint64_t kClassifierInitStream = 5;
constexpr uint64_t kClassifierTrainStream = 6;

constexpr PretextTask kAllTasks[] = {PretextTask::kRotation, PretextTask::kMissingPatch,
                                     PretextTask::kCorruption};

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

RunConfig::RunConfig() {
  pretext_train.epochs = 30;
  // At desk scale the reconstruction pretexts need a cooler optimizer than
  // the classifier: with lr 0.01 the per-step Adam displacement exceeds the
  // structure gradient and training flatlines at the mean-image plateau.
  pretext_train.lr = 0.001;
  classifier_train.epochs = 30;
}

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::kNone: return "none";
    case Regime::kPatience3: return "es3";
    case Regime::kPatience10: return "es10";
  }
  return "?";
}

std::optional<Regime> parse_regime(const std::string& name) {
  if (name == "none") return Regime::kNone;
  if (name == "es3") return Regime::kPatience3;
  if (name == "es10") return Regime::kPatience10;
  return std::nullopt;
}

std::string regime_label(Regime r, int epochs) {
  const std::string base = std::to_string(epochs) + " epochs";
  switch (r) {
    case Regime::kNone: return base + "; no Early Stopping";
    case Regime::kPatience3: return base + "; Early Stopping (patience level: 3)";
    case Regime::kPatience10: return base + "; Early Stopping (patience level: 10)";
  }
  return base;
}

namespace {

int regime_patience(Regime r) {
  switch (r) {
    case Regime::kNone: return 0;
    case Regime::kPatience3: return 3;
    case Regime::kPatience10: return 10;
  }
  return 0;
}

void require_keys(const json& obj, const std::string& context,
                  std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(context + " must be a JSON object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) {
        ok = true;
        break;
      }
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + context);
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("bad value for '") + key + "'");
  }
}

void parse_train_section(const json& j, const std::string& context, TrainConfig& tc,
                         bool allow_loss) {
  require_keys(j, context,
               {"lr", "epochs", "val_split", "batch_size", "early_stopping", "loss"});
  tc.lr = get_or(j, "lr", tc.lr);
  tc.epochs = get_or(j, "epochs", tc.epochs);
  tc.val_split = get_or(j, "val_split", tc.val_split);
  tc.batch_size = get_or(j, "batch_size", tc.batch_size);
  if (j.contains("early_stopping")) {
    const json& es = j.at("early_stopping");
    require_keys(es, context + ".early_stopping", {"enabled", "patience", "restore_best"});
    tc.early_stopping.enabled = get_or(es, "enabled", tc.early_stopping.enabled);
    tc.early_stopping.patience = get_or(es, "patience", tc.early_stopping.patience);
    tc.early_stopping.restore_best = get_or(es, "restore_best", tc.early_stopping.restore_best);
  }
  if (j.contains("loss")) {
    if (!allow_loss) throw ConfigError("'loss' is not configurable in " + context);
    const std::string loss = j.at("loss").get<std::string>();
    if (loss == "mse")
      tc.loss = LossKind::kMse;
    else if (loss == "cross_entropy")
      tc.loss = LossKind::kCrossEntropy;
    else
      throw ConfigError("unknown loss '" + loss + "' in " + context);
  }
}

}  // namespace

RunConfig run_config_from_json(const json& j) {
  RunConfig cfg;
  require_keys(j, "config",
               {"seed", "image_side", "threads", "encoder", "decoder", "pretext",
                "pretext_train", "classifier_train", "regimes", "dataset",
                "preprocess_means_bgr", "ssim_window"});
  cfg.seed = get_or<uint64_t>(j, "seed", cfg.seed);
  cfg.image_side = get_or(j, "image_side", cfg.image_side);
  cfg.threads = get_or(j, "threads", cfg.threads);

  if (j.contains("encoder")) {
    const json& e = j.at("encoder");
    require_keys(e, "encoder", {"n_stages", "base_channels", "channel_cap"});
    cfg.encoder.n_stages = get_or(e, "n_stages", cfg.encoder.n_stages);
    cfg.encoder.base_channels = get_or(e, "base_channels", cfg.encoder.base_channels);
    cfg.encoder.channel_cap = get_or(e, "channel_cap", cfg.encoder.channel_cap);
  }
  cfg.encoder.input_side = cfg.image_side;

  if (j.contains("decoder")) {
    const json& d = j.at("decoder");
    require_keys(d, "decoder", {"n_blocks", "top_channels"});
    cfg.decoder.n_blocks = get_or(d, "n_blocks", cfg.decoder.n_blocks);
    cfg.decoder.top_channels = get_or(d, "top_channels", cfg.decoder.top_channels);
  }

  if (j.contains("pretext")) {
    const json& p = j.at("pretext");
    require_keys(p, "pretext", {"mask_side", "swap_count", "swap_patch"});
    cfg.pretext.mask_side = get_or(p, "mask_side", cfg.pretext.mask_side);
    cfg.pretext.swap_count = get_or(p, "swap_count", cfg.pretext.swap_count);
    cfg.pretext.swap_patch = get_or(p, "swap_patch", cfg.pretext.swap_patch);
  }

  if (j.contains("pretext_train"))
    parse_train_section(j.at("pretext_train"), "pretext_train", cfg.pretext_train, false);
  if (j.contains("classifier_train"))
    parse_train_section(j.at("classifier_train"), "classifier_train", cfg.classifier_train,
                        true);

  if (j.contains("regimes")) {
    cfg.regimes.clear();
    for (const auto& r : j.at("regimes")) {
      auto parsed = parse_regime(r.get<std::string>());
      if (!parsed) throw ConfigError("unknown regime '" + r.get<std::string>() + "'");
      cfg.regimes.push_back(*parsed);
    }
    if (cfg.regimes.empty()) throw ConfigError("regimes list must be non-empty");
  }

  if (j.contains("dataset")) {
    const json& d = j.at("dataset");
    require_keys(d, "dataset",
                 {"kind", "n_train", "n_test", "balance", "train_manifest", "test_manifest"});
    const std::string kind = get_or<std::string>(d, "kind", "synthetic");
    if (kind == "synthetic") {
      cfg.dataset.kind = DatasetConfig::Kind::kSynthetic;
      cfg.dataset.n_train = get_or(d, "n_train", cfg.dataset.n_train);
      cfg.dataset.n_test = get_or(d, "n_test", cfg.dataset.n_test);
      cfg.dataset.balance = get_or(d, "balance", cfg.dataset.balance);
    } else if (kind == "manifest") {
      cfg.dataset.kind = DatasetConfig::Kind::kManifest;
      if (!d.contains("train_manifest") || !d.contains("test_manifest"))
        throw ConfigError("manifest dataset needs train_manifest and test_manifest");
      cfg.dataset.train_manifest = d.at("train_manifest").get<std::string>();
      cfg.dataset.test_manifest = d.at("test_manifest").get<std::string>();
    } else {
      throw ConfigError("dataset kind must be 'synthetic' or 'manifest', got '" + kind + "'");
    }
  }

  if (j.contains("preprocess_means_bgr")) {
    const json& m = j.at("preprocess_means_bgr");
    if (!m.is_array() || m.size() != 3)
      throw ConfigError("preprocess_means_bgr must be an array of 3 numbers (B, G, R)");
    cfg.preprocess.mean_b = m.at(0).get<double>();
    cfg.preprocess.mean_g = m.at(1).get<double>();
    cfg.preprocess.mean_r = m.at(2).get<double>();
  }

  if (j.contains("ssim_window")) {
    const std::string w = j.at("ssim_window").get<std::string>();
    if (w == "global")
      cfg.ssim_window = SsimParams::Window::kGlobal;
    else if (w == "gaussian")
      cfg.ssim_window = SsimParams::Window::kGaussian;
    else
      throw ConfigError("ssim_window must be 'global' or 'gaussian'");
  }

  // cross-field validation
  if (cfg.image_side < 8) throw ConfigError("image_side must be >= 8");
  if (cfg.image_side % (1 << cfg.encoder.n_stages) != 0)
    throw ConfigError("image_side must be divisible by 2^encoder.n_stages");
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return run_config_from_json(j);
}

json run_config_to_json(const RunConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["image_side"] = cfg.image_side;
  j["threads"] = cfg.threads;
  j["encoder"] = {{"n_stages", cfg.encoder.n_stages},
                  {"base_channels", cfg.encoder.base_channels},
                  {"channel_cap", cfg.encoder.channel_cap}};
  j["decoder"] = {{"n_blocks", cfg.decoder.n_blocks},
                  {"top_channels", cfg.decoder.top_channels}};
  j["pretext"] = {{"mask_side", cfg.pretext.mask_side},
                  {"swap_count", cfg.pretext.swap_count},
                  {"swap_patch", cfg.pretext.swap_patch}};
  auto train_json = [](const TrainConfig& tc, bool with_loss) {
    json t = {{"lr", tc.lr},
              {"epochs", tc.epochs},
              {"val_split", tc.val_split},
              {"batch_size", tc.batch_size},
              {"early_stopping",
               {{"enabled", tc.early_stopping.enabled},
                {"patience", tc.early_stopping.patience},
                {"restore_best", tc.early_stopping.restore_best}}}};
    if (with_loss) t["loss"] = tc.loss == LossKind::kMse ? "mse" : "cross_entropy";
    return t;
  };
  j["pretext_train"] = train_json(cfg.pretext_train, false);
  j["classifier_train"] = train_json(cfg.classifier_train, true);
  json regimes = json::array();
  for (Regime r : cfg.regimes) regimes.push_back(regime_name(r));
  j["regimes"] = regimes;
  if (cfg.dataset.kind == DatasetConfig::Kind::kSynthetic) {
    j["dataset"] = {{"kind", "synthetic"},
                    {"n_train", cfg.dataset.n_train},
                    {"n_test", cfg.dataset.n_test},
                    {"balance", cfg.dataset.balance}};
  } else {
    j["dataset"] = {{"kind", "manifest"},
                    {"train_manifest", cfg.dataset.train_manifest},
                    {"test_manifest", cfg.dataset.test_manifest}};
  }
  j["preprocess_means_bgr"] = {cfg.preprocess.mean_b, cfg.preprocess.mean_g,
                               cfg.preprocess.mean_r};
  j["ssim_window"] = cfg.ssim_window == SsimParams::Window::kGlobal ? "global" : "gaussian";
  return j;
}

std::string config_hash(const RunConfig& cfg) {
  const std::string canon = run_config_to_json(cfg).dump();
  const uint64_t h = fnv1a64(canon.data(), canon.size());
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

TrainData make_classifier_data(const std::vector<LabeledExample>& examples,
                               const PreprocessParams& params) {
  TrainData data;
  data.inputs.reserve(examples.size());
  data.targets.reserve(examples.size());
  for (const LabeledExample& ex : examples) {
    data.inputs.push_back(image_to_tensor(preprocess(ex.image, params)));
    data.targets.push_back(Tensor::scalar(static_cast<float>(ex.label)));
  }
  return data;
}

TrainData make_pretext_data(const PretextDataset& ds, const PreprocessParams& params) {
  TrainData data;
  data.inputs.reserve(ds.examples.size());
  data.targets.reserve(ds.examples.size());
  for (const PretextExample& ex : ds.examples) {
    data.inputs.push_back(image_to_tensor(preprocess(ex.input, params)));
    if (ex.has_image_target())
      data.targets.push_back(image_to_tensor(preprocess(ex.target_image(), params)));
    else
      data.targets.push_back(Tensor::scalar(static_cast<float>(ex.label())));
  }
  return data;
}

ModelSpec build_pretext_model(const RunConfig& cfg, PretextTask task) {
  const ModelSpec encoder = build_encoder(cfg.encoder);
  if (task == PretextTask::kRotation)
    return chain(encoder, build_rotation_head(encoder.output_shape));
  const ModelSpec decoder =
      build_deconv_decoder(encoder.output_shape, cfg.decoder.n_blocks, cfg.decoder.top_channels);
  if (decoder.output_shape != encoder.input_shape)
    throw ConfigError("decoder output " + shape_str(decoder.output_shape) +
                      " does not reconstruct the input " + shape_str(encoder.input_shape) +
                      "; set decoder.n_blocks == encoder.n_stages");
  return chain(encoder, decoder);
}

ModelSpec build_classifier_model(const RunConfig& cfg) {
  const ModelSpec encoder = build_encoder(cfg.encoder);
  return chain(encoder, build_classifier_head(encoder.output_shape));
}

namespace {

int task_index(PretextTask task) {
  switch (task) {
    case PretextTask::kRotation: return 0;
    case PretextTask::kMissingPatch: return 1;
    case PretextTask::kCorruption: return 2;
  }
  return -1;
}

std::vector<Image> images_of(const std::vector<LabeledExample>& examples) {
  std::vector<Image> images;
  images.reserve(examples.size());
  for (const LabeledExample& ex : examples) images.push_back(ex.image);
  return images;
}

}  // namespace

PretextPhaseResult run_pretext_phase(const RunConfig& cfg, PretextTask task,
                                     const std::vector<Image>& train_images,
                                     const TestSetGate& test_gate) {
  const int ti = task_index(task);
  PretextPhaseResult result;
  result.task = task;

  const PretextDataset train_ds = build_pretext_dataset(
      train_images, task, cfg.pretext, derive_seed(cfg.seed, kPretextGenStream, ti));
  const TrainData data = make_pretext_data(train_ds, cfg.preprocess);

  const ModelSpec model = build_pretext_model(cfg, task);
  ParamSet params = init_params(model, derive_seed(cfg.seed, kPretextInitStream, ti));

  TrainConfig tc = cfg.pretext_train;
  tc.seed = derive_seed(cfg.seed, kPretextTrainStream, ti);
  tc.loss = LossKind::kMse;
  auto [trained, history] = train(model, std::move(params), data, tc);
  result.params = std::move(trained);
  result.history = std::move(history);

  // evaluation on pretext pairs generated from the held-out test images,
  // read once, strictly after training
  const std::vector<Image> test_images = images_of(test_gate.read());
  const PretextDataset eval_ds = build_pretext_dataset(
      test_images, task, cfg.pretext, derive_seed(cfg.seed, kPretextEvalStream, ti));

  if (task == PretextTask::kRotation) {
    ScalarBatch batch;
    for (const PretextExample& ex : eval_ds.examples) {
      const Tensor in = image_to_tensor(preprocess(ex.input, cfg.preprocess));
      const Tensor out = forward_eval(model, result.params, in);
      // linear head: clip into the label range before the distance metrics
      const double pred = std::clamp(static_cast<double>(out.data[0]), 0.0, 1.0);
      batch.y.push_back(ex.label());
      batch.y_hat.push_back(pred);
    }
    result.metrics = {{"mse", mse_scalar(batch)},
                      {"aad_scaled", aad(batch, false)},
                      {"aad_degrees", aad(batch, true)},
                      {"std_degrees", 360.0 * std_abs_err(batch)},
                      {"n_test", batch.y.size()}};
  } else {
    std::vector<Image> targets, preds;
    SsimParams sp;
    sp.window = cfg.ssim_window;
    for (const PretextExample& ex : eval_ds.examples) {
      const Tensor in = image_to_tensor(preprocess(ex.input, cfg.preprocess));
      const Tensor out = forward_eval(model, result.params, in);
      preds.push_back(deprocess(tensor_to_image(out, ChannelOrder::kBgr), cfg.preprocess,
                                /*clamp=*/true));
      targets.push_back(ex.target_image());
    }
    const ImageBatchMse batch_mse = mse_images(targets, preds);
    std::vector<double> ssims;
    ssims.reserve(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i)
      ssims.push_back(ssim(targets[i], preds[i], sp));
    const MeanStd ssim_ms = mean_std_population(ssims);
    result.metrics = {{"mse_mean", batch_mse.mean},
                      {"mse_std", batch_mse.stddev},
                      {"ssim_mean", ssim_ms.mean},
                      {"ssim_std", ssim_ms.stddev},
                      {"n_test", targets.size()}};
  }
  return result;
}

CellResult run_classification_phase(const RunConfig& cfg, const ParamSet* init, Regime regime,
                                    const std::vector<LabeledExample>& train_examples,
                                    const TestSetGate& test_gate) {
  const ModelSpec model = build_classifier_model(cfg);
  const uint64_t init_seed = derive_seed(cfg.seed, kClassifierInitStream);
  ParamSet params =
      init ? transfer_encoder_weights(*init, model, init_seed) : init_params(model, init_seed);

  TrainConfig tc = cfg.classifier_train;
  tc.seed = derive_seed(cfg.seed, kClassifierTrainStream,
                        static_cast<uint64_t>(regime_patience(regime)));
  if (regime == Regime::kNone) {
    tc.early_stopping.enabled = false;
  } else {
    tc.early_stopping.enabled = true;
    tc.early_stopping.patience = regime_patience(regime);
  }

  const TrainData data = make_classifier_data(train_examples, cfg.preprocess);
  auto [trained, history] = train(model, std::move(params), data, tc);

  const std::vector<LabeledExample>& test = test_gate.read();
  ScalarBatch batch;
  for (const LabeledExample& ex : test) {
    const Tensor in = image_to_tensor(preprocess(ex.image, cfg.preprocess));
    const Tensor out = forward_eval(model, trained, in);
    batch.y.push_back(static_cast<double>(ex.label));
    batch.y_hat.push_back(static_cast<double>(out.data[0]));
  }
  CellResult cell;
  cell.accuracy = accuracy_pct(batch, 0.5);
  cell.history = std::move(history);
  return cell;
}

int resolve_worker_count(int config_threads, std::size_t n_jobs) {
  int workers = config_threads > 0
                    ? config_threads
                    : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("SSPB_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || cap < 1)
      throw ConfigError("SSPB_THREADS must be a positive integer, got '" + std::string(env) +
                        "'");
    workers = std::min(workers, static_cast<int>(cap));
  }
  workers = std::min<std::size_t>(workers, std::max<std::size_t>(n_jobs, 1));
  return std::max(workers, 1);
}

void run_jobs(std::vector<std::function<void()>>& jobs, int workers) {
  if (jobs.empty()) return;
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      jobs[i]();
    }
  };
  if (workers <= 1) {
    worker();
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
}

std::string iso8601_utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

MatrixResult run_matrix(const RunConfig& cfg) {
  const std::string started_at = iso8601_utc_now();

  std::vector<LabeledExample> train_examples;
  std::vector<LabeledExample> test_examples;
  if (cfg.dataset.kind == DatasetConfig::Kind::kSynthetic) {
    SynthConfig synth;
    synth.side = cfg.image_side;
    synth.balance = cfg.dataset.balance;
    synth.n = cfg.dataset.n_train;
    synth.seed = derive_seed(cfg.seed, 0x7261696eULL);  // train split stream
    train_examples = generate_synthetic(synth);
    synth.n = cfg.dataset.n_test;
    synth.seed = derive_seed(cfg.seed, 0x74657374ULL);  // test split stream
    test_examples = generate_synthetic(synth);
  } else {
    train_examples = load_manifest(cfg.dataset.train_manifest);
    test_examples = load_manifest(cfg.dataset.test_manifest);
  }
  for (const auto& ex : train_examples)
    if (ex.image.height != cfg.image_side || ex.image.width != cfg.image_side)
      throw ConfigError("training image " + ex.source_id + " is not image_side x image_side");
  for (const auto& ex : test_examples)
    if (ex.image.height != cfg.image_side || ex.image.width != cfg.image_side)
      throw ConfigError("test image " + ex.source_id + " is not image_side x image_side");

  const std::vector<Image> train_images = images_of(train_examples);
  const TestSetGate gate(std::move(test_examples));

  // phase 1: pretext encoders, trained once and shared across regimes
  struct PhaseSlot {
    bool ok = false;
    std::string error;
    PretextPhaseResult result;
  };
  PhaseSlot phases[3];
  {
    std::vector<std::function<void()>> jobs;
    for (PretextTask task : kAllTasks) {
      jobs.push_back([&, task]() {
        PhaseSlot& slot = phases[task_index(task)];
        try {
          slot.result = run_pretext_phase(cfg, task, train_images, gate);
          slot.ok = true;
        } catch (const std::exception& e) {
          slot.error = e.what();
        }
      });
    }
    run_jobs(jobs, resolve_worker_count(cfg.threads, jobs.size()));
  }

  // phase 2: the init x regime grid
  struct CellSlot {
    std::string init;
    Regime regime = Regime::kNone;
    bool ok = false;
    std::string error;
    CellResult result;
  };
  std::vector<CellSlot> cells;
  const char* init_names[] = {"none", "rotation", "missing_patch", "corruption"};
  for (Regime regime : cfg.regimes)
    for (int init = 0; init < 4; ++init) {
      CellSlot slot;
      slot.init = init_names[init];
      slot.regime = regime;
      cells.push_back(std::move(slot));
    }
  {
    std::vector<std::function<void()>> jobs;
    for (CellSlot& slot : cells) {
      jobs.push_back([&, cell = &slot]() {
        const ParamSet* init = nullptr;
        if (cell->init != "none") {
          const PhaseSlot& phase =
              phases[task_index(*parse_task(cell->init))];
          if (!phase.ok) {
            cell->error = "pretext phase failed: " + phase.error;
            return;
          }
          init = &phase.result.params;
        }
        try {
          cell->result =
              run_classification_phase(cfg, init, cell->regime, train_examples, gate);
          cell->ok = true;
        } catch (const std::exception& e) {
          cell->error = e.what();
        }
      });
    }
    run_jobs(jobs, resolve_worker_count(cfg.threads, jobs.size()));
  }

  // report assembly
  MatrixResult out;
  out.cells_total = static_cast<int>(cells.size());

  json table1_cells = json::array();
  for (const CellSlot& slot : cells) {
    json cell = {{"init", slot.init},
                 {"regime", regime_name(slot.regime)},
                 {"regime_label", regime_label(slot.regime, cfg.classifier_train.epochs)},
                 {"status", slot.ok ? "ok" : "failed"}};
    if (slot.ok) {
      cell["accuracy_pct"] = slot.result.accuracy;
      cell["epochs_run"] = slot.result.history.stopped_epoch;
      cell["best_epoch"] = slot.result.history.best_epoch;
      if (slot.regime != Regime::kNone) cell["patience"] = regime_patience(slot.regime);
    } else {
      cell["error"] = slot.error;
      ++out.failed_cells;
    }
    table1_cells.push_back(std::move(cell));
  }

  json regimes = json::array();
  for (Regime r : cfg.regimes) regimes.push_back(regime_name(r));

  json table2;
  json table3 = json::array();
  for (PretextTask task : kAllTasks) {
    const PhaseSlot& slot = phases[task_index(task)];
    json entry = {{"task", task_name(task)}, {"status", slot.ok ? "ok" : "failed"}};
    if (slot.ok) {
      entry.update(slot.result.metrics);
      entry["pretrain_epochs_run"] = slot.result.history.stopped_epoch;
    } else {
      entry["error"] = slot.error;
      ++out.failed_cells;
    }
    if (task == PretextTask::kRotation)
      table2 = std::move(entry);
    else
      table3.push_back(std::move(entry));
  }

  out.report = {
      {"schema_version", kReportSchemaVersion},
      {"table1", {{"regimes", regimes}, {"cells", table1_cells}}},
      {"table2", table2},
      {"table3", table3},
      {"ssim_window",
       cfg.ssim_window == SsimParams::Window::kGlobal ? "global" : "gaussian"},
      {"provenance",
       {{"config_hash", config_hash(cfg)},
        {"config", run_config_to_json(cfg)},
        {"seed", cfg.seed},
        {"version", kToolkitVersion},
        {"started_at", started_at},
        {"finished_at", iso8601_utc_now()}}},
  };
  out.test_set_reads = gate.reads();
  return out;
}

void write_report_files(const std::filesystem::path& out_dir, const json& report) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  write_file_atomic(out_dir / "report.json", report.dump(2) + "\n");

  // Table 1 layout: one row per regime, one accuracy column per init.
  {
    std::ostringstream csv;
    csv << "model_type,no_self_supervision,rotation_prediction,missing_patch,corruption_"
           "removal\n";
    const json& cells = report.at("table1").at("cells");
    for (const auto& regime : report.at("table1").at("regimes")) {
      std::string label;
      std::string row;
      for (const char* init : {"none", "rotation", "missing_patch", "corruption"}) {
        for (const auto& cell : cells) {
          if (cell.at("regime") != regime || cell.at("init") != init) continue;
          label = cell.at("regime_label").get<std::string>();
          row += ",";
          row += cell.at("status") == "ok" ? fmt_double(cell.at("accuracy_pct").get<double>())
                                           : "failed";
        }
      }
      csv << "\"" << label << "\"" << row << "\n";
    }
    write_file_atomic(out_dir / "table1.csv", csv.str());
  }

  // Table 2 layout: the four rotation metrics in paper column order.
  {
    std::ostringstream csv;
    csv << "mean_squared_error,average_absolute_difference_scaled,average_absolute_difference_"
           "not_scaled,standard_deviation\n";
    const json& t2 = report.at("table2");
    if (t2.at("status") == "ok") {
      csv << fmt_double(t2.at("mse").get<double>()) << ","
          << fmt_double(t2.at("aad_scaled").get<double>()) << ","
          << fmt_double(t2.at("aad_degrees").get<double>()) << ","
          << fmt_double(t2.at("std_degrees").get<double>()) << "\n";
    } else {
      csv << "failed,failed,failed,failed\n";
    }
    write_file_atomic(out_dir / "table2.csv", csv.str());
  }

  // Table 3 layout: one row per image task.
  {
    std::ostringstream csv;
    csv << "self_supervision_method,mean_squared_error_average,mean_squared_error_standard_"
           "deviation,structural_similarity_index_average,structural_similarity_index_standard_"
           "deviation\n";
    for (const auto& entry : report.at("table3")) {
      const std::string name =
          entry.at("task") == "missing_patch" ? "Missing Patch" : "Corruption Removal";
      if (entry.at("status") == "ok") {
        csv << name << "," << fmt_double(entry.at("mse_mean").get<double>()) << ","
            << fmt_double(entry.at("mse_std").get<double>()) << ","
            << fmt_double(entry.at("ssim_mean").get<double>()) << ","
            << fmt_double(entry.at("ssim_std").get<double>()) << "\n";
      } else {
        csv << name << ",failed,failed,failed,failed\n";
      }
    }
    write_file_atomic(out_dir / "table3.csv", csv.str());
  }
}

}  // namespace sspb
