// Acceptance suite: one test case per criterion, each printing a single
// [criterion N] PASS/FAIL line with the measured quantity.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>

#include "sspb/harness.hpp"
#include "sspb/png_io.hpp"
#include "sspb/weights.hpp"

using namespace sspb;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

void report(int criterion, bool ok, const std::string& detail) {
  std::printf("[criterion %2d] %s  %s\n", criterion, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  CHECK_MESSAGE(ok, "criterion ", criterion, ": ", detail);
}

std::string fmt(const char* pattern, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c);
  return buf;
}

Tensor64 random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor64 t(shape);
  for (double& v : t.data) v = rng.uniform(lo, hi);
  return t;
}

Image random_image(int h, int w, Rng& rng) {
  Image img(h, w);
  for (double& v : img.pixels) v = rng.uniform(0.0, 255.0);
  return img;
}

double rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({0.1, std::abs(analytic), std::abs(numeric)});
}

}  // namespace

// ---------------------------------------------------------------------------
// criterion 1: gradient suite
// ---------------------------------------------------------------------------

namespace {

enum class OpKind { kConv, kDense, kRelu, kPool, kUpsample, kDropout };

bool takes_spatial(OpKind k) {
  return k == OpKind::kConv || k == OpKind::kPool || k == OpKind::kUpsample;
}

struct NetEval {
  std::vector<Tensor64> leaves;   // input + parameters, in creation order
  std::vector<Tensor64> grads;    // analytic gradients per leaf
  std::vector<uint8_t> relu_signs;  // activation pattern; probes that flip it
                                    // straddle the kink and are excluded
  double loss = 0.0;
};

// builds input -> a -> b -> mse(target); overriding leaf values when given
NetEval eval_net(OpKind a, OpKind b, uint64_t data_seed, uint64_t drop_seed,
                 const std::vector<Tensor64>* override_leaves, bool want_grads) {
  Rng data_rng(data_seed);
  Tape<double> tape;
  std::vector<int> ids;
  std::size_t next_override = 0;
  NetEval out;
  auto add_leaf = [&](Tensor64 v) {
    if (override_leaves) v = (*override_leaves)[next_override];
    ++next_override;
    ids.push_back(tape.leaf(std::move(v), true));
    return ids.back();
  };

  int cur = add_leaf(random_tensor(takes_spatial(a) ? Shape{4, 4, 2} : Shape{6}, data_rng));
  auto apply = [&](OpKind kind, int node, uint64_t dseed) {
    switch (kind) {
      case OpKind::kConv: {
        const std::size_t c = tape.value(node).shape[2];
        const int k = add_leaf(random_tensor({3, 3, c, 2}, data_rng, -0.8, 0.8));
        const int bb = add_leaf(random_tensor({2}, data_rng, -0.5, 0.5));
        return tape.conv2d(node, k, bb, 1, Padding::kSame);
      }
      case OpKind::kDense: {
        const std::size_t n = tape.value(node).shape[0];
        const int w = add_leaf(random_tensor({n, 3}, data_rng, -0.8, 0.8));
        const int bb = add_leaf(random_tensor({3}, data_rng, -0.5, 0.5));
        return tape.dense(node, w, bb);
      }
      case OpKind::kRelu:
        for (double v : tape.value(node).data) out.relu_signs.push_back(v > 0 ? 1 : 0);
        return tape.relu(node);
      case OpKind::kPool:
        return tape.global_avg_pool(node);
      case OpKind::kUpsample:
        return tape.upsample_nearest(node, 2);
      case OpKind::kDropout: {
        Rng drop_rng(dseed);
        return tape.dropout(node, 0.4, true, drop_rng);
      }
    }
    return node;
  };
  cur = apply(a, cur, drop_seed);
  cur = apply(b, cur, drop_seed + 1);
  const Tensor64 target = random_tensor(tape.value(cur).shape, data_rng);
  const int tgt = tape.leaf(target, false);
  const int loss = tape.mse(cur, tgt);

  out.loss = tape.value(loss).data[0];
  for (int id : ids) out.leaves.push_back(tape.value(id));
  if (want_grads) {
    tape.backward(loss);
    for (int id : ids) out.grads.push_back(tape.grad(id));
  }
  return out;
}

}  // namespace

TEST_CASE("criterion 1: gradient suite") {
  Timer timer;
  const std::vector<std::pair<OpKind, OpKind>> nets = {
      {OpKind::kConv, OpKind::kConv},     {OpKind::kConv, OpKind::kRelu},
      {OpKind::kConv, OpKind::kPool},     {OpKind::kConv, OpKind::kUpsample},
      {OpKind::kConv, OpKind::kDropout},  {OpKind::kUpsample, OpKind::kConv},
      {OpKind::kUpsample, OpKind::kPool}, {OpKind::kPool, OpKind::kDense},
      {OpKind::kPool, OpKind::kDropout},  {OpKind::kDense, OpKind::kRelu},
      {OpKind::kDense, OpKind::kDense},   {OpKind::kDense, OpKind::kDropout},
      {OpKind::kDropout, OpKind::kDense}, {OpKind::kRelu, OpKind::kDense},
      {OpKind::kDropout, OpKind::kRelu}};

  const double h = 1e-3;
  double max_err = 0.0;
  long probes = 0, kink_skips = 0;
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    for (const auto& [a, b] : nets) {
      const uint64_t data_seed = seed * 7919 + 13;
      const uint64_t drop_seed = seed * 104729 + 7;
      const NetEval base = eval_net(a, b, data_seed, drop_seed, nullptr, true);
      for (std::size_t li = 0; li < base.leaves.size(); ++li) {
        for (std::size_t i = 0; i < base.leaves[li].size(); ++i) {
          auto probe = base.leaves;
          probe[li].data[i] += h;
          const NetEval up = eval_net(a, b, data_seed, drop_seed, &probe, false);
          probe[li].data[i] -= 2 * h;
          const NetEval down = eval_net(a, b, data_seed, drop_seed, &probe, false);
          ++probes;
          if (up.relu_signs != down.relu_signs) {
            // the difference quotient straddles a ReLU kink, where the
            // one-sided derivatives genuinely disagree
            ++kink_skips;
            continue;
          }
          max_err =
              std::max(max_err, rel_err(base.grads[li].data[i], (up.loss - down.loss) / (2 * h)));
        }
      }
    }
  }
  const double secs = timer.seconds();
  report(1, max_err < 1e-4 && secs < 60.0,
         fmt("gradient suite: max rel err %.3g (< 1e-4) over %.0f probes", max_err,
             (double)probes) +
             fmt(" (%.0f kink-straddling skipped), %.1f s (< 60)", (double)kink_skips, secs));
}

// ---------------------------------------------------------------------------
// criterion 2: oracle equivalence
// ---------------------------------------------------------------------------

namespace {

Tensor64 conv_oracle(const Tensor64& in, const Tensor64& k, const Tensor64& b, int stride,
                     Padding padding) {
  const int h = (int)in.shape[0], w = (int)in.shape[1], c = (int)in.shape[2];
  const int kh = (int)k.shape[0], kw = (int)k.shape[1], f = (int)k.shape[3];
  int oh, ow, pt, pl;
  if (padding == Padding::kSame) {
    oh = (h + stride - 1) / stride;
    ow = (w + stride - 1) / stride;
    pt = std::max((oh - 1) * stride + kh - h, 0) / 2;
    pl = std::max((ow - 1) * stride + kw - w, 0) / 2;
  } else {
    oh = (h - kh) / stride + 1;
    ow = (w - kw) / stride + 1;
    pt = pl = 0;
  }
  Tensor64 out({(std::size_t)oh, (std::size_t)ow, (std::size_t)f});
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x)
      for (int fi = 0; fi < f; ++fi) {
        double acc = b.data[fi];
        for (int i = 0; i < kh; ++i)
          for (int j = 0; j < kw; ++j)
            for (int ci = 0; ci < c; ++ci) {
              const int iy = y * stride - pt + i, ix = x * stride - pl + j;
              if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
              acc += in.at(iy, ix, ci) * k.at(i, j, ci, fi);
            }
        out.at(y, x, fi) = acc;
      }
  return out;
}

double ssim_oracle(const Image& a, const Image& b, double c1, double c2) {
  double total = 0;
  const double n = (double)a.height * a.width;
  for (int ch = 0; ch < 3; ++ch) {
    double mu_a = 0, mu_b = 0;
    for (int r = 0; r < a.height; ++r)
      for (int c = 0; c < a.width; ++c) {
        mu_a += a.at(r, c, ch) / n;
        mu_b += b.at(r, c, ch) / n;
      }
    double va = 0, vb = 0, cov = 0;
    for (int r = 0; r < a.height; ++r)
      for (int c = 0; c < a.width; ++c) {
        va += (a.at(r, c, ch) - mu_a) * (a.at(r, c, ch) - mu_a) / n;
        vb += (b.at(r, c, ch) - mu_b) * (b.at(r, c, ch) - mu_b) / n;
        cov += (a.at(r, c, ch) - mu_a) * (b.at(r, c, ch) - mu_b) / n;
      }
    total += ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) /
             ((mu_a * mu_a + mu_b * mu_b + c1) * (va + vb + c2)) / 3.0;
  }
  return total;
}

}  // namespace

TEST_CASE("criterion 2: oracle equivalence") {
  Timer timer;
  Rng rng(20250811);
  double worst = 0.0;

  for (int trial = 0; trial < 25; ++trial) {
    // conv2d
    {
      const int stride = 1 + trial % 2;
      const Padding pad = trial % 3 ? Padding::kSame : Padding::kValid;
      const auto in = random_tensor({5, 5, 2}, rng);
      const auto k = random_tensor({3, 3, 2, 4}, rng);
      const auto b = random_tensor({4}, rng);
      const auto got = conv2d_forward(in, k, b, stride, pad);
      const auto want = conv_oracle(in, k, b, stride, pad);
      for (std::size_t i = 0; i < got.size(); ++i)
        worst = std::max(worst, std::abs(got.data[i] - want.data[i]));
    }
    // dense
    {
      const auto x = random_tensor({7}, rng);
      const auto w = random_tensor({7, 4}, rng);
      const auto b = random_tensor({4}, rng);
      const auto got = dense_forward(x, w, b);
      for (int j = 0; j < 4; ++j) {
        double acc = b.data[j];
        for (int i = 0; i < 7; ++i) acc += x.data[i] * w.data[i * 4 + j];
        worst = std::max(worst, std::abs(got.data[j] - acc));
      }
    }
    // global_avg_pool
    {
      const auto x = random_tensor({6, 5, 3}, rng);
      const auto got = global_avg_pool_forward(x);
      for (int ch = 0; ch < 3; ++ch) {
        double acc = 0;
        for (int r = 0; r < 6; ++r)
          for (int c = 0; c < 5; ++c) acc += x.at(r, c, ch);
        worst = std::max(worst, std::abs(got.data[ch] - acc / 30.0));
      }
    }
  }
  const bool layer_ok = worst < 1e-5;

  double worst_metric = 0.0;
  for (int trial = 0; trial < 25; ++trial) {
    // mse + std_abs_err on scalar batches
    {
      ScalarBatch batch;
      std::vector<double> errs;
      for (int i = 0; i < 17; ++i) {
        batch.y.push_back(rng.uniform(-2, 2));
        batch.y_hat.push_back(rng.uniform(-2, 2));
        errs.push_back(std::abs(batch.y_hat.back() - batch.y.back()));
      }
      double m = 0;
      for (double e : errs) m += e * e;
      worst_metric = std::max(worst_metric, std::abs(mse_scalar(batch) - m / 17.0));
      double mean = 0;
      for (double e : errs) mean += e / 17.0;
      double var = 0;
      for (double e : errs) var += (e - mean) * (e - mean) / 17.0;
      worst_metric = std::max(worst_metric, std::abs(std_abs_err(batch) - std::sqrt(var)));
    }
    // ssim
    {
      const Image a = random_image(32, 32, rng);
      const Image b = random_image(32, 32, rng);
      SsimParams p;
      worst_metric =
          std::max(worst_metric, std::abs(ssim(a, b, p) - ssim_oracle(a, b, p.c1(), p.c2())));
    }
  }
  const bool metric_ok = worst_metric < 1e-6;
  const double secs = timer.seconds();
  report(2, layer_ok && metric_ok && secs < 60.0,
         fmt("oracles: layer max diff %.3g (< 1e-5), metric max diff %.3g (< 1e-6)", worst,
             worst_metric) +
             fmt(", %.1f s (< 60)", secs));
}

// ---------------------------------------------------------------------------
// criterion 3: corruption round trip
// ---------------------------------------------------------------------------

TEST_CASE("criterion 3: corruption round trip") {
  Timer timer;
  bool ok = true;
  Rng seeds(333);
  for (int i = 0; i < 50 && ok; ++i) {
    Rng rng(seeds.next_u64());
    const Image img = random_image(64, 64, rng);
    const auto [corrupted, record] = corrupt_swap(img, 100, 9, rng);
    ok = ok && uncorrupt(corrupted, record).pixels == img.pixels;
    std::vector<double> a = img.pixels, b = corrupted.pixels;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    ok = ok && a == b;
  }
  const double secs = timer.seconds();
  report(3, ok && secs < 30.0,
         fmt("50 images, 100 swaps: bitwise round trip + multiset, %.1f s (< 30)", secs));
}

// ---------------------------------------------------------------------------
// criterion 4: preprocess round trip
// ---------------------------------------------------------------------------

TEST_CASE("criterion 4: preprocess round trip") {
  Rng rng(444);
  const PreprocessParams params;
  double max_diff = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Image img = random_image(24, 24, rng);
    const Image round = deprocess(preprocess(img, params), params);
    for (std::size_t p = 0; p < img.pixels.size(); ++p)
      max_diff = std::max(max_diff, std::abs(round.pixels[p] - img.pixels[p]));
  }
  const Image sample = random_image(16, 16, rng);
  const Image twice = swap_red_blue(swap_red_blue(sample));
  const bool flip_ok = twice.pixels == sample.pixels && twice.order == sample.order;
  report(4, max_diff < 1e-5 && flip_ok,
         fmt("round trip max diff %.3g (< 1e-5), double channel flip identity: %.0f", max_diff,
             flip_ok ? 1 : 0));
}

// ---------------------------------------------------------------------------
// criterion 5: rotation geometry
// ---------------------------------------------------------------------------

TEST_CASE("criterion 5: rotation geometry") {
  Rng rng(555);
  bool identity_ok = true;
  for (int i = 0; i < 10; ++i) {
    const Image img = random_image(16, 16, rng);
    identity_ok = identity_ok && rotate_image(img, 0.0).pixels == img.pixels;
  }

  double max_diff = 0.0;
  for (int i = 0; i < 10; ++i) {
    const Image img = random_image(16, 16, rng);
    const Image rot = rotate_image(img, 90.0);
    for (int r = 0; r < 16; ++r)
      for (int c = 0; c < 16; ++c)
        for (int ch = 0; ch < 3; ++ch)
          max_diff = std::max(max_diff, std::abs(rot.at(r, c, ch) - img.at(15 - c, r, ch)));
  }

  int deciles[10] = {0};
  for (int i = 0; i < 10000; ++i) {
    Rng ex_rng(derive_seed(987, (uint64_t)i));
    const double angle = ex_rng.uniform() * 360.0;
    ++deciles[std::min(9, (int)(angle / 36.0))];
  }
  bool decile_ok = true;
  int worst_decile = 1000;
  for (int d = 0; d < 10; ++d) {
    if (std::abs(deciles[d] - 1000) > std::abs(worst_decile - 1000)) worst_decile = deciles[d];
    decile_ok = decile_ok && deciles[d] >= 850 && deciles[d] <= 1150;
  }
  report(5, identity_ok && max_diff <= 1e-4 && decile_ok,
         fmt("rotate(0) bitwise: %.0f, 90-degree lattice max diff %.3g (<= 1e-4), worst decile "
             "%f in [850,1150]",
             identity_ok ? 1 : 0, max_diff, (double)worst_decile));
}

// ---------------------------------------------------------------------------
// criterion 6: early stopping
// ---------------------------------------------------------------------------

namespace {

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

TEST_CASE("criterion 6: early stopping") {
  // rule equivalence on 1000 random sequences per patience level
  Rng rng(666);
  int mismatches = 0;
  for (int patience : {1, 3, 10}) {
    for (int trial = 0; trial < 1000; ++trial) {
      const int n = 1 + rng.uniform_int(30);
      std::vector<double> losses(n);
      for (double& v : losses) v = std::floor(rng.uniform(0.0, 6.0));
      if (early_stop_decision(losses, patience) != brute_force_decision(losses, patience))
        ++mismatches;
    }
  }

  // k + p exactness: improvements through epoch k, then flat
  bool kp_ok = true;
  for (int p : {1, 3, 10}) {
    for (int k : {1, 2, 7}) {
      std::vector<double> losses;
      for (int e = 1; e <= k; ++e) losses.push_back(100.0 - e);  // strict improvements
      int stopped = 0;
      for (int e = k + 1; e <= k + 50; ++e) {
        losses.push_back(100.0 - k);  // never improves again
        if (early_stop_decision(losses, p) == StopDecision::kStop) {
          stopped = e;
          break;
        }
      }
      kp_ok = kp_ok && stopped == k + p;
    }
  }

  // the "100 epochs; no Early Stopping" regime yields exactly 100 history rows
  RunConfig cfg;
  cfg.seed = 66;
  cfg.image_side = 16;
  cfg.encoder = {16, 1, 2, 8};
  cfg.classifier_train.epochs = 100;
  cfg.classifier_train.batch_size = 8;
  SynthConfig sc;
  sc.n = 16;
  sc.side = 16;
  sc.seed = 1;
  const auto train_examples = generate_synthetic(sc);
  sc.n = 4;
  sc.seed = 2;
  const TestSetGate gate(generate_synthetic(sc));
  const CellResult cell =
      run_classification_phase(cfg, nullptr, Regime::kNone, train_examples, gate);
  const bool budget_ok = cell.history.stopped_epoch == 100 &&
                         (int)cell.history.val_loss.size() == 100;

  report(6, mismatches == 0 && kp_ok && budget_ok,
         fmt("rule mismatches %f/3000, k+p exact: %.0f, 100-epoch budget ran %.0f epochs",
             (double)mismatches, kp_ok ? 1 : 0, (double)cell.history.stopped_epoch));
}

// ---------------------------------------------------------------------------
// criterion 7: metric formula checks
// ---------------------------------------------------------------------------

TEST_CASE("criterion 7: metric formula checks") {
  const double acc = accuracy_pct({{0.0, 1.0}, {0.2, 0.6}});
  const bool acc_ok = std::abs(acc - 70.0) < 1e-12;

  ScalarBatch pair{{0.0}, {0.062}};
  const double scaled = aad(pair, false);
  const double degrees = aad(pair, true);
  const bool aad_exact = degrees == 360.0 * scaled;
  const bool aad_paper = std::abs(degrees - 22.32) < 1e-12;

  Rng rng(777);
  double worst_self = 0.0;
  for (int i = 0; i < 5; ++i) {
    const Image img = random_image(20, 20, rng);
    worst_self = std::max(worst_self, std::abs(ssim(img, img) - 1.0));
  }
  report(7, acc_ok && aad_exact && aad_paper && worst_self < 1e-9,
         fmt("accuracy %.12g (= 70), aad 0.062 -> %.6g degrees, ssim self-gap %.3g (< 1e-9)",
             acc, degrees, worst_self));
}

// ---------------------------------------------------------------------------
// criterion 8: end-to-end directional experiment
// ---------------------------------------------------------------------------

TEST_CASE("criterion 8: end-to-end directional experiment") {
  Timer timer;
  constexpr uint64_t kBaseSeed = 1000;  // frozen
  double mean_random = 0.0, mean_corruption = 0.0;

  struct SeedJob {
    double random_acc = 0.0, corruption_acc = 0.0;
  };
  SeedJob jobs_out[3];
  std::vector<std::function<void()>> jobs;
  for (int s = 0; s < 3; ++s) {
    jobs.push_back([s, &jobs_out]() {
      RunConfig cfg;
      cfg.seed = kBaseSeed + s;
      SynthConfig synth;
      synth.side = cfg.image_side;
      synth.n = cfg.dataset.n_train;
      synth.seed = derive_seed(cfg.seed, 0x7261696eULL);
      const auto train_examples = generate_synthetic(synth);
      synth.n = cfg.dataset.n_test;
      synth.seed = derive_seed(cfg.seed, 0x74657374ULL);
      const TestSetGate gate(generate_synthetic(synth));

      std::vector<Image> train_images;
      for (const auto& ex : train_examples) train_images.push_back(ex.image);

      const PretextPhaseResult pre =
          run_pretext_phase(cfg, PretextTask::kCorruption, train_images, gate);
      jobs_out[s].random_acc =
          run_classification_phase(cfg, nullptr, Regime::kPatience10, train_examples, gate)
              .accuracy;
      jobs_out[s].corruption_acc =
          run_classification_phase(cfg, &pre.params, Regime::kPatience10, train_examples, gate)
              .accuracy;
    });
  }
  run_jobs(jobs, resolve_worker_count(0, jobs.size()));
  for (int s = 0; s < 3; ++s) {
    mean_random += jobs_out[s].random_acc / 3.0;
    mean_corruption += jobs_out[s].corruption_acc / 3.0;
  }
  const double secs = timer.seconds();
  report(8, mean_corruption >= mean_random && secs < 1800.0,
         fmt("corruption-init mean %.2f%% >= random-init mean %.2f%% over 3 seeds, %.0f s (< "
             "1800)",
             mean_corruption, mean_random, secs));
}

// ---------------------------------------------------------------------------
// criterion 9: matrix determinism
// ---------------------------------------------------------------------------

TEST_CASE("criterion 9: matrix determinism") {
  RunConfig cfg;
  cfg.seed = 99;
  cfg.image_side = 32;
  cfg.encoder = {32, 2, 4, 64};
  cfg.decoder = {2, 8};
  cfg.pretext_train.epochs = 2;
  cfg.pretext_train.batch_size = 8;
  cfg.classifier_train.epochs = 3;
  cfg.classifier_train.batch_size = 8;
  cfg.dataset.n_train = 40;
  cfg.dataset.n_test = 10;

  const fs::path dir1 = fs::temp_directory_path() / "sspb_accept_m1";
  const fs::path dir2 = fs::temp_directory_path() / "sspb_accept_m2";
  fs::remove_all(dir1);
  fs::remove_all(dir2);

  const MatrixResult r1 = run_matrix(cfg);
  write_report_files(dir1, r1.report);
  const MatrixResult r2 = run_matrix(cfg);
  write_report_files(dir2, r2.report);

  auto slurp = [](const fs::path& p) {
    std::ifstream f(p);
    return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
  };
  // CSVs carry no timestamps: byte-identical
  const bool csv_ok = slurp(dir1 / "table1.csv") == slurp(dir2 / "table1.csv") &&
                      slurp(dir1 / "table2.csv") == slurp(dir2 / "table2.csv") &&
                      slurp(dir1 / "table3.csv") == slurp(dir2 / "table3.csv");
  // report.json identical modulo the timestamp fields
  json a = r1.report, b = r2.report;
  a.at("provenance").erase("started_at");
  a.at("provenance").erase("finished_at");
  b.at("provenance").erase("started_at");
  b.at("provenance").erase("finished_at");
  const bool json_ok = a == b;
  const bool cells_ok = r1.failed_cells == 0 && r2.failed_cells == 0;
  report(9, csv_ok && json_ok && cells_ok,
         fmt("reruns byte-identical modulo timestamps (csv %.0f, json %.0f, failures %f)",
             csv_ok ? 1 : 0, json_ok ? 1 : 0, (double)(r1.failed_cells + r2.failed_cells)));
}

// ---------------------------------------------------------------------------
// criterion 10: serialization
// ---------------------------------------------------------------------------

TEST_CASE("criterion 10: serialization") {
  const fs::path dir = fs::temp_directory_path() / "sspb_accept_ser";
  fs::remove_all(dir);
  fs::create_directories(dir);

  // weight file: save -> load -> save byte-identical
  const ModelSpec enc = build_encoder({16, 2, 4, 64});
  const ParamSet params = init_params(chain(enc, build_rotation_head(enc.output_shape)), 10);
  save_weights(dir / "a.sspw", params);
  save_weights(dir / "b.sspw", load_weights(dir / "a.sspw"));
  auto slurp_bytes = [](const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return std::vector<char>((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
  };
  const bool weights_ok = slurp_bytes(dir / "a.sspw") == slurp_bytes(dir / "b.sspw");

  // manifest/PNG round trip preserves pixels exactly
  SynthConfig sc;
  sc.n = 8;
  sc.side = 32;
  sc.seed = 10;
  const auto examples = generate_synthetic(sc);
  write_labeled_dataset(dir / "ds", examples);
  const auto loaded = load_manifest(dir / "ds" / kManifestName);
  bool pixels_ok = loaded.size() == examples.size();
  for (std::size_t i = 0; pixels_ok && i < loaded.size(); ++i)
    pixels_ok = loaded[i].image.pixels == examples[i].image.pixels &&
                loaded[i].label == examples[i].label;

  report(10, weights_ok && pixels_ok,
         fmt("weight file byte-identical: %.0f, manifest/PNG pixels exact: %.0f",
             weights_ok ? 1 : 0, pixels_ok ? 1 : 0));
}
