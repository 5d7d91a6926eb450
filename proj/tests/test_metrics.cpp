#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sspb/metrics.hpp"

using namespace sspb;

namespace {

Image random_image(int h, int w, Rng& rng) {
  Image img(h, w);
  for (double& v : img.pixels) v = rng.uniform(0.0, 255.0);
  return img;
}

// direct single-pass-free restatement of the global SSIM formula, one channel
double ssim_oracle_channel(const Image& a, const Image& b, int ch, double c1, double c2) {
  const double n = (double)a.height * a.width;
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
  return ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) /
         ((mu_a * mu_a + mu_b * mu_b + c1) * (va + vb + c2));
}

}  // namespace

TEST_CASE("accuracy_pct: exact formula cases") {
  CHECK(accuracy_pct({{0.0, 1.0}, {0.0, 1.0}}) == 100.0);
  CHECK(accuracy_pct({{0.0, 0.0}, {1.0, 1.0}}) == 0.0);
  CHECK(accuracy_pct({{0.0, 1.0}, {0.2, 0.6}}) == doctest::Approx(70.0).epsilon(1e-12));
}

TEST_CASE("accuracy_pct: thresholding maps predictions to {0,1} first") {
  const ScalarBatch batch{{0.0, 1.0, 1.0, 0.0}, {0.4, 0.6, 0.2, 0.49}};
  CHECK(accuracy_pct(batch, 0.5) == doctest::Approx(75.0));
  CHECK(accuracy_pct(batch, 0.1) == doctest::Approx(50.0));
}

TEST_CASE("accuracy_pct: domain and usage errors") {
  CHECK_THROWS_AS(accuracy_pct({{0.0}, {1.2}}), DomainError);
  CHECK_THROWS_AS(accuracy_pct({{-0.1}, {0.5}}), DomainError);
  CHECK_THROWS_AS(accuracy_pct({{}, {}}), UsageError);
  CHECK_THROWS_AS(accuracy_pct({{0.5}, {0.5, 0.5}}), ShapeError);
}

TEST_CASE("accuracy_pct stays within [0, 100] on random batches") {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    ScalarBatch batch;
    for (int i = 0; i < 20; ++i) {
      batch.y.push_back(rng.uniform());
      batch.y_hat.push_back(rng.uniform());
    }
    const double acc = accuracy_pct(batch);
    CHECK(acc >= 0.0);
    CHECK(acc <= 100.0);
  }
}

TEST_CASE("mse: scalar and image batches vs naive accumulation") {
  CHECK(mse_scalar({{1.0, 2.0}, {1.0, 2.0}}) == 0.0);

  std::vector<Image> zeros{Image::filled(4, 4, 0, 0, 0)};
  std::vector<Image> twos{Image::filled(4, 4, 2, 2, 2)};
  const auto batch = mse_images(zeros, twos);
  CHECK(batch.mean == doctest::Approx(4.0));
  CHECK(batch.per_image.size() == 1);

  Rng rng(2);
  ScalarBatch sb;
  double acc = 0;
  for (int i = 0; i < 33; ++i) {
    sb.y.push_back(rng.uniform(-5, 5));
    sb.y_hat.push_back(rng.uniform(-5, 5));
    acc += (sb.y_hat.back() - sb.y.back()) * (sb.y_hat.back() - sb.y.back());
  }
  CHECK(std::abs(mse_scalar(sb) - acc / 33.0) < 1e-6);
}

TEST_CASE("mse_images: per-image list feeds the batch mean/std") {
  Rng rng(3);
  std::vector<Image> y, y_hat;
  for (int i = 0; i < 7; ++i) {
    y.push_back(random_image(8, 8, rng));
    y_hat.push_back(random_image(8, 8, rng));
  }
  const auto batch = mse_images(y, y_hat);
  const auto ms = mean_std_population(batch.per_image);
  CHECK(batch.mean == doctest::Approx(ms.mean));
  CHECK(batch.stddev == doctest::Approx(ms.stddev));
  CHECK_THROWS_AS(mse_images(y, {y_hat[0]}), ShapeError);
}

TEST_CASE("std_abs_err: forced cases and two-pass oracle") {
  CHECK(std_abs_err({{0.0, 1.0, 2.0}, {0.5, 1.5, 2.5}}) == doctest::Approx(0.0));
  CHECK(std_abs_err({{0.0, 0.0}, {0.0, 2.0}}) == doctest::Approx(1.0));  // errors {0,2}

  Rng rng(4);
  ScalarBatch batch;
  std::vector<double> errs;
  for (int i = 0; i < 41; ++i) {
    batch.y.push_back(rng.uniform(-3, 3));
    batch.y_hat.push_back(rng.uniform(-3, 3));
    errs.push_back(std::abs(batch.y_hat.back() - batch.y.back()));
  }
  double mean = 0;
  for (double e : errs) mean += e / errs.size();
  double var = 0;
  for (double e : errs) var += (e - mean) * (e - mean) / errs.size();
  CHECK(std::abs(std_abs_err(batch) - std::sqrt(var)) < 1e-9);

  CHECK_THROWS_AS(std_abs_err({{}, {}}), UsageError);
}

TEST_CASE("std_abs_err is shift-invariant") {
  Rng rng(5);
  ScalarBatch batch, shifted;
  for (int i = 0; i < 20; ++i) {
    batch.y.push_back(rng.uniform(0, 1));
    batch.y_hat.push_back(rng.uniform(0, 1));
    shifted.y.push_back(batch.y.back() + 3.7);
    shifted.y_hat.push_back(batch.y_hat.back() + 3.7);
  }
  CHECK(std_abs_err(batch) == doctest::Approx(std_abs_err(shifted)).epsilon(1e-12));
}

TEST_CASE("aad: scaling is exactly 360x and matches the reported pair") {
  ScalarBatch batch{{0.0}, {0.062}};
  const double scaled = aad(batch, false);
  const double degrees = aad(batch, true);
  CHECK(degrees == 360.0 * scaled);  // exact, same accumulation path
  CHECK(degrees == doctest::Approx(22.32).epsilon(1e-12));

  CHECK(aad({{0.25, 0.75}, {0.25, 0.75}}, false) == 0.0);
  CHECK_THROWS_AS(aad({{0.5}, {1.5}}, false), DomainError);
}

TEST_CASE("aad: constant 0.5 prediction against uniform labels converges to 0.25") {
  Rng rng(42);
  ScalarBatch batch;
  for (int i = 0; i < 100000; ++i) {
    batch.y.push_back(rng.uniform());
    batch.y_hat.push_back(0.5);
  }
  CHECK(aad(batch, false) == doctest::Approx(0.25).epsilon(0.02));
  CHECK(aad(batch, true) == doctest::Approx(90.0).epsilon(0.02));
}

TEST_CASE("mse >= (mean abs err)^2 on random batches") {
  Rng rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    ScalarBatch batch;
    for (int i = 0; i < 25; ++i) {
      batch.y.push_back(rng.uniform());
      batch.y_hat.push_back(rng.uniform());
    }
    const double mae = aad(batch, false);
    CHECK(mse_scalar(batch) >= mae * mae - 1e-12);
  }
}

TEST_CASE("ssim: self-similarity is exactly 1") {
  Rng rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    const Image img = random_image(16, 16, rng);
    CHECK(ssim(img, img) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("ssim: constant 0 vs constant 255 closed form") {
  const Image black = Image::filled(8, 8, 0, 0, 0);
  const Image white = Image::filled(8, 8, 255, 255, 255);
  SsimParams p;
  const double expect = p.c1() / (255.0 * 255.0 + p.c1());  // c1 = 6.5025
  CHECK(p.c1() == doctest::Approx(6.5025));
  CHECK(ssim(black, white, p) == doctest::Approx(expect).epsilon(1e-9));
  CHECK(ssim(black, white, p) == doctest::Approx(1.0e-4).epsilon(0.01));
}

TEST_CASE("ssim: global window matches the direct-formula oracle") {
  Rng rng(8);
  SsimParams p;
  for (int trial = 0; trial < 25; ++trial) {
    const Image a = random_image(32, 32, rng);
    const Image b = random_image(32, 32, rng);
    double expect = 0;
    for (int ch = 0; ch < 3; ++ch) expect += ssim_oracle_channel(a, b, ch, p.c1(), p.c2()) / 3.0;
    CHECK(ssim(a, b, p) == doctest::Approx(expect).epsilon(1e-6));
  }
}

TEST_CASE("ssim: symmetric in its arguments") {
  Rng rng(9);
  for (auto window : {SsimParams::Window::kGlobal, SsimParams::Window::kGaussian}) {
    SsimParams p;
    p.window = window;
    for (int trial = 0; trial < 5; ++trial) {
      const Image a = random_image(16, 16, rng);
      const Image b = random_image(16, 16, rng);
      CHECK(std::abs(ssim(a, b, p) - ssim(b, a, p)) < 1e-9);
    }
  }
}

TEST_CASE("ssim: gaussian window against a literal sliding-window reference") {
  Rng rng(10);
  const Image a = random_image(14, 14, rng);
  const Image b = random_image(14, 14, rng);
  SsimParams p;
  p.window = SsimParams::Window::kGaussian;

  // reference: same definition, written independently with explicit loops
  const int ws = 11, half = 5;
  std::vector<double> kernel(ws * ws);
  double ksum = 0;
  for (int i = 0; i < ws; ++i)
    for (int j = 0; j < ws; ++j) {
      kernel[i * ws + j] = std::exp(-((i - half) * (i - half) + (j - half) * (j - half)) /
                                    (2.0 * 1.5 * 1.5));
      ksum += kernel[i * ws + j];
    }
  for (double& w : kernel) w /= ksum;
  double total = 0;
  int count = 0;
  for (int ch = 0; ch < 3; ++ch)
    for (int r = half; r < 14 - half; ++r)
      for (int c = half; c < 14 - half; ++c) {
        double mu_a = 0, mu_b = 0;
        for (int i = 0; i < ws; ++i)
          for (int j = 0; j < ws; ++j) {
            mu_a += kernel[i * ws + j] * a.at(r + i - half, c + j - half, ch);
            mu_b += kernel[i * ws + j] * b.at(r + i - half, c + j - half, ch);
          }
        double va = 0, vb = 0, cov = 0;
        for (int i = 0; i < ws; ++i)
          for (int j = 0; j < ws; ++j) {
            const double da = a.at(r + i - half, c + j - half, ch) - mu_a;
            const double db = b.at(r + i - half, c + j - half, ch) - mu_b;
            va += kernel[i * ws + j] * da * da;
            vb += kernel[i * ws + j] * db * db;
            cov += kernel[i * ws + j] * da * db;
          }
        total += ((2 * mu_a * mu_b + p.c1()) * (2 * cov + p.c2())) /
                 ((mu_a * mu_a + mu_b * mu_b + p.c1()) * (va + vb + p.c2()));
        ++count;
      }
  CHECK(ssim(a, b, p) == doctest::Approx(total / count).epsilon(1e-9));
}

TEST_CASE("ssim: dimension mismatch raises") {
  CHECK_THROWS_AS(ssim(Image(4, 4), Image(4, 5)), ShapeError);
}
