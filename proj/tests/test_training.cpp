#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "sspb/train.hpp"
#include "sspb/weights.hpp"

using namespace sspb;

namespace {

// 1-parameter linear model y = w * x as a dense layer without bias freedom
ModelSpec linear_model() {
  ModelSpec spec;
  spec.input_shape = {1};
  spec.layers.push_back(LayerOp::dense("head/w", 1, 1));
  finalize_spec(spec);
  return spec;
}

TrainData line_data(int n, double slope, uint64_t seed) {
  Rng rng(seed);
  TrainData data;
  for (int i = 0; i < n; ++i) {
    const float x = (float)rng.uniform(-1.0, 1.0);
    data.inputs.push_back(Tensor::scalar(x));
    data.targets.push_back(Tensor::scalar((float)(slope * x)));
  }
  return data;
}

// literal restatement of the stopping rule, recomputed from scratch per epoch
StopDecision brute_force_decision(const std::vector<double>& losses, int patience) {
  const int n = (int)losses.size();
  if (n < patience) return StopDecision::kContinue;
  for (int i = n - patience; i < n; ++i) {
    if (i < 0) return StopDecision::kContinue;
    double best_before = std::numeric_limits<double>::infinity();
    for (int j = 0; j < i; ++j) best_before = std::min(best_before, losses[j]);
    if (losses[i] < best_before) return StopDecision::kContinue;
  }
  return StopDecision::kStop;
}

}  // namespace

TEST_CASE("split_train_val: 10 examples at 0.2 give 8/2; partition is exact") {
  std::vector<int> items(10);
  for (int i = 0; i < 10; ++i) items[i] = i;
  const auto [train, val] = split_train_val(items, 0.2, 42);
  CHECK(train.size() == 8);
  CHECK(val.size() == 2);

  std::multiset<int> all(train.begin(), train.end());
  all.insert(val.begin(), val.end());
  CHECK(all == std::multiset<int>(items.begin(), items.end()));
  std::set<int> train_set(train.begin(), train.end());
  for (int v : val) CHECK(train_set.count(v) == 0);
}

TEST_CASE("split_train_val: seed-deterministic, seeds differ") {
  std::vector<int> items(20);
  for (int i = 0; i < 20; ++i) items[i] = i;
  const auto a = split_train_val(items, 0.25, 1);
  const auto b = split_train_val(items, 0.25, 1);
  CHECK(a == b);
  const auto c = split_train_val(items, 0.25, 2);
  CHECK(a != c);
}

TEST_CASE("split_train_val: degenerate sizes are config errors") {
  std::vector<int> one{1};
  CHECK_THROWS_AS(split_train_val(one, 0.2, 1), ConfigError);
  std::vector<int> ten(10, 0);
  CHECK_THROWS_AS(split_train_val(ten, 0.01, 1), ConfigError);  // empty val side
  CHECK_THROWS_AS(split_train_val(ten, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(split_train_val(ten, 1.0, 1), ConfigError);
}

TEST_CASE("early_stop_decision: forced example and monotone cases") {
  CHECK(early_stop_decision({5, 4, 3, 3, 3, 3}, 3) == StopDecision::kStop);
  CHECK(early_stop_decision({5, 4, 3, 3, 3}, 3) == StopDecision::kContinue);
  CHECK(early_stop_decision({5, 4, 3, 2, 1}, 3) == StopDecision::kContinue);
  CHECK(early_stop_decision({5, 4, 3, 3, 3, 4.5}, 3) == StopDecision::kStop);
  CHECK(early_stop_decision({1}, 1) == StopDecision::kContinue);  // epoch 1 always improves
  CHECK(early_stop_decision({1, 1}, 1) == StopDecision::kStop);
  CHECK_THROWS_AS(early_stop_decision({1.0}, 0), ParamError);
}

TEST_CASE("early_stop_decision matches the brute-force rule on random sequences") {
  Rng rng(7);
  for (int patience : {1, 3, 10}) {
    for (int trial = 0; trial < 400; ++trial) {
      const int n = 1 + rng.uniform_int(25);
      std::vector<double> losses(n);
      for (double& v : losses) v = std::floor(rng.uniform(0.0, 8.0));  // ties are common
      CHECK(early_stop_decision(losses, patience) == brute_force_decision(losses, patience));
    }
  }
}

TEST_CASE("train: convex toy problem converges") {
  const ModelSpec spec = linear_model();
  ParamSet params = init_params(spec, 3);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.batch_size = 8;
  cfg.seed = 9;
  cfg.early_stopping.enabled = false;
  const auto [trained, history] = train(spec, std::move(params), line_data(50, 2.0, 4), cfg);
  CHECK(history.stopped_epoch <= 200);
  CHECK(history.train_loss.back() < 1e-3);
  CHECK(trained.at("head/w/weight").data[0] == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("train: epochs=1 with early stopping disabled yields exactly one history entry") {
  const ModelSpec spec = linear_model();
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.seed = 1;
  const auto [_, history] = train(spec, init_params(spec, 1), line_data(10, 1.0, 2), cfg);
  CHECK(history.train_loss.size() == 1);
  CHECK(history.val_loss.size() == 1);
  CHECK(history.stopped_epoch == 1);
  CHECK(history.best_epoch == 1);
}

TEST_CASE("train: same seed and config give a bitwise-identical ParamSet") {
  const ModelSpec spec = linear_model();
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.batch_size = 4;
  cfg.seed = 77;
  const TrainData data = line_data(30, -1.3, 5);
  const auto [p1, h1] = train(spec, init_params(spec, 2), data, cfg);
  const auto [p2, h2] = train(spec, init_params(spec, 2), data, cfg);
  CHECK(encode_weights(p1) == encode_weights(p2));
  CHECK(h1.train_loss == h2.train_loss);
  CHECK(h1.val_loss == h2.val_loss);
}

TEST_CASE("train: validation examples never contribute gradients") {
  const ModelSpec spec = linear_model();
  TrainConfig cfg;
  cfg.epochs = 12;
  cfg.batch_size = 4;
  cfg.seed = 31;
  cfg.val_split = 0.2;
  TrainData data = line_data(25, 0.8, 6);

  const auto [p1, h1] = train(spec, init_params(spec, 4), data, cfg);

  // replace exactly the validation examples with noise
  const auto [train_idx, val_idx] = split_indices(data.inputs.size(), cfg.val_split, cfg.seed);
  TrainData noisy = data;
  Rng rng(99);
  for (std::size_t i : val_idx) {
    noisy.inputs[i] = Tensor::scalar((float)rng.uniform(-9.0, 9.0));
    noisy.targets[i] = Tensor::scalar((float)rng.uniform(-9.0, 9.0));
  }
  const auto [p2, h2] = train(spec, init_params(spec, 4), noisy, cfg);

  CHECK(h1.train_loss == h2.train_loss);  // bitwise: gradients untouched by val data
  CHECK(encode_weights(p1) == encode_weights(p2));
  CHECK(h1.val_loss != h2.val_loss);
}

TEST_CASE("train: early stopping regimes behave per the rule") {
  const ModelSpec spec = linear_model();
  const TrainData data = line_data(20, 1.0, 8);

  SUBCASE("disabled: stopped_epoch equals the budget") {
    TrainConfig cfg;
    cfg.epochs = 17;
    cfg.seed = 2;
    const auto [_, history] = train(spec, init_params(spec, 1), data, cfg);
    CHECK(history.stopped_epoch == 17);
  }

  SUBCASE("patience p on a converged run stops early with l ength best+p") {
    TrainConfig cfg;
    cfg.epochs = 400;
    cfg.batch_size = 20;
    cfg.seed = 2;
    cfg.early_stopping.enabled = true;
    cfg.early_stopping.patience = 4;
    const auto [_, history] = train(spec, init_params(spec, 1), data, cfg);
    CHECK(history.stopped_epoch < 400);
    // the final `patience` epochs each failed to improve on the best before them
    const auto& vl = history.val_loss;
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> best_before(vl.size());
    for (std::size_t i = 0; i < vl.size(); ++i) {
      best_before[i] = best;
      best = std::min(best, vl[i]);
    }
    for (std::size_t i = vl.size() - 4; i < vl.size(); ++i) CHECK(vl[i] >= best_before[i]);
  }
}

TEST_CASE("train: restore_best returns the parameters of the best epoch") {
  const ModelSpec spec = linear_model();
  const TrainData data = line_data(20, 1.5, 9);
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.batch_size = 4;
  cfg.seed = 5;
  cfg.early_stopping.enabled = true;
  cfg.early_stopping.patience = 5;
  cfg.early_stopping.restore_best = true;
  const auto [params, history] = train(spec, init_params(spec, 6), data, cfg);

  // recompute the validation loss of the returned parameters
  const auto [train_idx, val_idx] = split_indices(data.inputs.size(), cfg.val_split, cfg.seed);
  double val_sum = 0.0;
  for (std::size_t i : val_idx) {
    const Tensor pred = forward_eval(spec, params, data.inputs[i]);
    val_sum += mse_loss(pred, data.targets[i]);
  }
  const double val = val_sum / (double)val_idx.size();
  const double best = *std::min_element(history.val_loss.begin(), history.val_loss.end());
  CHECK(std::abs(val - best) < 1e-7);
  CHECK(history.best_val_loss == doctest::Approx(best));
}

TEST_CASE("train: non-finite loss aborts naming epoch and batch") {
  const ModelSpec spec = linear_model();
  TrainData data = line_data(10, 1.0, 3);
  data.targets[0] = Tensor::scalar(std::numeric_limits<float>::quiet_NaN());
  data.targets[5] = Tensor::scalar(std::numeric_limits<float>::quiet_NaN());
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.seed = 1;
  try {
    train(spec, init_params(spec, 1), data, cfg);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("epoch 1") != std::string::npos);
    CHECK(std::string(e.what()).find("batch") != std::string::npos);
  }
}

TEST_CASE("train: input shape mismatch is a shape error") {
  const ModelSpec spec = linear_model();
  TrainData data;
  data.inputs.push_back(Tensor({2}));
  data.targets.push_back(Tensor::scalar(0));
  data.inputs.push_back(Tensor({2}));
  data.targets.push_back(Tensor::scalar(0));
  TrainConfig cfg;
  CHECK_THROWS_AS(train(spec, init_params(spec, 1), data, cfg), ShapeError);
}

TEST_CASE("history CSV has one row per epoch plus a summary line") {
  const ModelSpec spec = linear_model();
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.seed = 1;
  const auto [_, history] = train(spec, init_params(spec, 1), line_data(10, 1.0, 2), cfg);
  const auto path = std::filesystem::temp_directory_path() / "sspb_train_test" / "h.csv";
  write_history_csv(path, history);
  std::ifstream f(path);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(f, line)) lines.push_back(line);
  REQUIRE(lines.size() == 5);  // header + 3 epochs + summary
  CHECK(lines[0] == "epoch,train_loss,val_loss");
  CHECK(lines[1].rfind("1,", 0) == 0);
  CHECK(lines[4].rfind("# stopped_epoch=3", 0) == 0);
}
