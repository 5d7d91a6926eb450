#include "sspb/train.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "sspb/weights.hpp"

namespace sspb {

namespace {
// stream tags for derived seeds
constexpr uint64_t kSplitStream = 0x53504c49;    // "SPLI"
constexpr uint64_t kShuffleStream = 0x53485546;  // "SHUF"
constexpr uint64_t kDropoutStream = 0x44524f50;  // "DROP"
}  // namespace

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double val_split, uint64_t seed) {
  if (!(val_split > 0.0 && val_split < 1.0))
    throw ConfigError("val_split must lie strictly between 0 and 1");
  if (n < 2) throw ConfigError("need at least 2 examples to split");
  const std::size_t n_val = static_cast<std::size_t>(std::llround(
      static_cast<double>(n) * val_split));
  if (n_val == 0 || n_val >= n)
    throw ConfigError("val_split " + std::to_string(val_split) + " leaves an empty side for n=" +
                      std::to_string(n));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(derive_seed(seed, kSplitStream));
  shuffle(idx, rng);
  std::vector<std::size_t> train(idx.begin(), idx.end() - static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> val(idx.end() - static_cast<std::ptrdiff_t>(n_val), idx.end());
  return {std::move(train), std::move(val)};
}

StopDecision early_stop_decision(const std::vector<double>& val_losses, int patience) {
  if (patience < 1) throw ParamError("early stopping patience must be >= 1");
  const int n = static_cast<int>(val_losses.size());
  if (n < patience + 1) return StopDecision::kContinue;  // the first epoch always improves
  // prefix minima: best[i] = min over epochs < i
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> best_before(n);
  for (int i = 0; i < n; ++i) {
    best_before[i] = best;
    best = std::min(best, val_losses[i]);
  }
  for (int i = n - patience; i < n; ++i)
    if (val_losses[i] < best_before[i]) return StopDecision::kContinue;
  return StopDecision::kStop;
}

namespace {

double eval_example_loss(const ModelSpec& spec, const ParamSet& params, const Tensor& input,
                         const Tensor& target, LossKind loss) {
  const Tensor pred = forward_eval(spec, params, input);
  return loss == LossKind::kMse ? static_cast<double>(mse_loss(pred, target))
                                : static_cast<double>(bce_loss(pred, target));
}

}  // namespace

std::pair<ParamSet, TrainHistory> train(const ModelSpec& spec, ParamSet params,
                                        const TrainData& data, const TrainConfig& cfg) {
  const auto t_start = std::chrono::steady_clock::now();
  if (data.inputs.size() != data.targets.size())
    throw UsageError("train data inputs and targets differ in count");
  if (cfg.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (cfg.early_stopping.enabled && cfg.early_stopping.patience < 1)
    throw ConfigError("early stopping patience must be >= 1");
  for (const Tensor& in : data.inputs)
    if (in.shape != spec.input_shape)
      throw ShapeError("training input shape " + shape_str(in.shape) +
                       " does not match model input " + shape_str(spec.input_shape));

  auto [train_idx, val_idx] = split_indices(data.inputs.size(), cfg.val_split, cfg.seed);
  const std::size_t n_train = train_idx.size();

  const std::vector<std::string> names = param_names(spec);
  AdamState adam;
  adam.hp.lr = cfg.lr;

  TrainHistory history;
  ParamSet best_params;
  double best_val = std::numeric_limits<double>::infinity();

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(cfg.seed, kShuffleStream, static_cast<uint64_t>(epoch)));
    shuffle(train_idx, shuffle_rng);

    double train_loss_sum = 0.0;
    int batch_index = 0;
    for (std::size_t start = 0; start < n_train; start += cfg.batch_size, ++batch_index) {
      const std::size_t stop = std::min(n_train, start + cfg.batch_size);
      const std::size_t bn = stop - start;

      Tape<float> tape;
      std::map<std::string, int> pnodes;
      for (const std::string& name : names) pnodes[name] = tape.leaf(params.at(name), true);
      Rng dropout_rng(derive_seed(cfg.seed, kDropoutStream,
                                  (static_cast<uint64_t>(epoch) << 32) |
                                      static_cast<uint64_t>(batch_index)));
      std::vector<int> losses;
      losses.reserve(bn);
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t i = train_idx[k];
        const int in = tape.leaf(data.inputs[i], false);
        const int out = build_forward(tape, spec, pnodes, in, true, &dropout_rng);
        const int tgt = tape.leaf(data.targets[i], false);
        losses.push_back(cfg.loss == LossKind::kMse ? tape.mse(out, tgt) : tape.bce(out, tgt));
      }
      const int batch_loss = tape.scale(tape.sum_scalars(losses), 1.0f / static_cast<float>(bn));
      const double loss_value = static_cast<double>(tape.value(batch_loss).data[0]);
      if (!std::isfinite(loss_value))
        throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(batch_index));
      tape.backward(batch_loss);

      ParamSet grads;
      for (const std::string& name : names) grads[name] = tape.grad(pnodes.at(name));
      adam_step(params, grads, adam);

      train_loss_sum += loss_value * static_cast<double>(bn);
    }
    history.train_loss.push_back(train_loss_sum / static_cast<double>(n_train));

    double val_sum = 0.0;
    for (std::size_t i : val_idx)
      val_sum += eval_example_loss(spec, params, data.inputs[i], data.targets[i], cfg.loss);
    const double val_loss = val_sum / static_cast<double>(val_idx.size());
    history.val_loss.push_back(val_loss);
    history.stopped_epoch = epoch;

    if (val_loss < best_val) {
      best_val = val_loss;
      history.best_epoch = epoch;
      if (cfg.early_stopping.restore_best) best_params = params;
    }

    if (cfg.early_stopping.enabled &&
        early_stop_decision(history.val_loss, cfg.early_stopping.patience) ==
            StopDecision::kStop)
      break;
  }

  history.best_val_loss = best_val;
  history.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  if (cfg.early_stopping.restore_best && !best_params.empty())
    return {std::move(best_params), std::move(history)};
  return {std::move(params), std::move(history)};
}

void write_history_csv(const std::filesystem::path& path, const TrainHistory& history) {
  std::ostringstream out;
  out << "epoch,train_loss,val_loss\n";
  out.precision(10);
  for (std::size_t e = 0; e < history.train_loss.size(); ++e)
    out << (e + 1) << "," << history.train_loss[e] << "," << history.val_loss[e] << "\n";
  out << "# stopped_epoch=" << history.stopped_epoch << " best_epoch=" << history.best_epoch
      << " best_val_loss=" << history.best_val_loss << "\n";
  write_file_atomic(path, out.str());
}

}  // namespace sspb
