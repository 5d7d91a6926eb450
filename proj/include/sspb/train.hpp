#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include "sspb/model.hpp"

namespace sspb {

enum class LossKind { kMse, kCrossEntropy };

struct EarlyStopping {
  bool enabled = false;
  int patience = 3;
  bool restore_best = false;
};

struct TrainConfig {
  double lr = 0.01;
  int epochs = 100;
  double val_split = 0.2;
  int batch_size = 16;
  EarlyStopping early_stopping;
  uint64_t seed = 0;
  LossKind loss = LossKind::kMse;
};

struct TrainHistory {
  std::vector<double> train_loss;  // one entry per epoch actually run
  std::vector<double> val_loss;
  int stopped_epoch = 0;  // 1-based count of epochs run
  int best_epoch = 0;     // 1-based epoch with the lowest validation loss
  double best_val_loss = 0.0;
  double wall_seconds = 0.0;
};

// Seeded shuffle, then the tail fraction becomes the validation set; the
// partition is disjoint and exhaustive. Both sides must end up non-empty.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double val_split, uint64_t seed);

template <typename T>
std::pair<std::vector<T>, std::vector<T>> split_train_val(const std::vector<T>& items,
                                                          double val_split, uint64_t seed) {
  auto [train_idx, val_idx] = split_indices(items.size(), val_split, seed);
  std::vector<T> train, val;
  train.reserve(train_idx.size());
  val.reserve(val_idx.size());
  for (std::size_t i : train_idx) train.push_back(items[i]);
  for (std::size_t i : val_idx) val.push_back(items[i]);
  return {std::move(train), std::move(val)};
}

enum class StopDecision { kContinue, kStop };

// Stop iff each of the most recent `patience` epochs failed to strictly
// improve on the best validation loss seen before it.
StopDecision early_stop_decision(const std::vector<double>& val_losses, int patience);

// Supervised pairs in tensor form. Targets are {1}-shaped scalars for the
// rotation and classification tasks and H x W x 3 images for reconstruction.
struct TrainData {
  std::vector<Tensor> inputs;
  std::vector<Tensor> targets;
};

// Mini-batch Adam over a seeded shuffle of the train split each epoch, with
// per-epoch validation loss and optional early stopping. Single-threaded and
// bitwise deterministic for a fixed (config, data) pair. A non-finite batch
// loss aborts with a NumericError naming the epoch and batch.
std::pair<ParamSet, TrainHistory> train(const ModelSpec& spec, ParamSet params,
                                        const TrainData& data, const TrainConfig& cfg);

// `epoch,train_loss,val_loss` rows plus a trailing summary comment line.
void write_history_csv(const std::filesystem::path& path, const TrainHistory& history);

}  // namespace sspb
