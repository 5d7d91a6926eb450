#include "sspb/metrics.hpp"

#include <cmath>

#include "sspb/error.hpp"

namespace sspb {

namespace {

void check_batch(const ScalarBatch& batch, bool unit_interval) {
  if (batch.y.empty()) throw UsageError("metric batch must be non-empty");
  if (batch.y.size() != batch.y_hat.size())
    throw ShapeError("metric batch target/prediction counts differ");
  if (unit_interval) {
    for (double v : batch.y)
      if (!(v >= 0.0 && v <= 1.0))
        throw DomainError("target outside [0, 1]: " + std::to_string(v));
    for (double v : batch.y_hat)
      if (!(v >= 0.0 && v <= 1.0))
        throw DomainError("prediction outside [0, 1]: " + std::to_string(v));
  }
}

}  // namespace

MeanStd mean_std_population(const std::vector<double>& xs) {
  if (xs.empty()) throw UsageError("mean/std of an empty list");
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / static_cast<double>(xs.size());
  double sq = 0.0;
  for (double x : xs) sq += (x - mean) * (x - mean);
  return {mean, std::sqrt(sq / static_cast<double>(xs.size()))};
}

double accuracy_pct(const ScalarBatch& batch, std::optional<double> threshold) {
  check_batch(batch, true);
  double abs_sum = 0.0;
  for (std::size_t i = 0; i < batch.y.size(); ++i) {
    const double pred =
        threshold ? (batch.y_hat[i] >= *threshold ? 1.0 : 0.0) : batch.y_hat[i];
    abs_sum += std::abs(pred - batch.y[i]);
  }
  return 100.0 - (abs_sum / static_cast<double>(batch.y.size())) * 100.0;
}

double mse_scalar(const ScalarBatch& batch) {
  check_batch(batch, false);
  double acc = 0.0;
  for (std::size_t i = 0; i < batch.y.size(); ++i) {
    const double d = batch.y_hat[i] - batch.y[i];
    acc += d * d;
  }
  return acc / static_cast<double>(batch.y.size());
}

ImageBatchMse mse_images(const std::vector<Image>& y, const std::vector<Image>& y_hat) {
  if (y.empty()) throw UsageError("metric batch must be non-empty");
  if (y.size() != y_hat.size()) throw ShapeError("image batch counts differ");
  ImageBatchMse out;
  out.per_image.reserve(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!y[i].same_size(y_hat[i]))
      throw ShapeError("image pair " + std::to_string(i) + " has mismatched dimensions");
    double acc = 0.0;
    for (std::size_t p = 0; p < y[i].pixels.size(); ++p) {
      const double d = y_hat[i].pixels[p] - y[i].pixels[p];
      acc += d * d;
    }
    out.per_image.push_back(acc / static_cast<double>(y[i].pixels.size()));
  }
  const MeanStd ms = mean_std_population(out.per_image);
  out.mean = ms.mean;
  out.stddev = ms.stddev;
  return out;
}

double std_abs_err(const ScalarBatch& batch) {
  check_batch(batch, false);
  std::vector<double> abs_err(batch.y.size());
  for (std::size_t i = 0; i < batch.y.size(); ++i)
    abs_err[i] = std::abs(batch.y_hat[i] - batch.y[i]);
  return mean_std_population(abs_err).stddev;
}

double aad(const ScalarBatch& batch, bool scale_to_degrees) {
  check_batch(batch, true);
  double acc = 0.0;
  for (std::size_t i = 0; i < batch.y.size(); ++i) acc += std::abs(batch.y_hat[i] - batch.y[i]);
  const double mean = acc / static_cast<double>(batch.y.size());
  return scale_to_degrees ? 360.0 * mean : mean;
}

namespace {

double ssim_from_stats(double mu_a, double mu_b, double var_a, double var_b, double cov,
                       const SsimParams& p) {
  const double c1 = p.c1();
  const double c2 = p.c2();
  return ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
         ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
}

double ssim_channel_global(const Image& a, const Image& b, int ch, const SsimParams& p) {
  const std::size_t n = static_cast<std::size_t>(a.height) * a.width;
  double sum_a = 0.0, sum_b = 0.0;
  for (int r = 0; r < a.height; ++r)
    for (int c = 0; c < a.width; ++c) {
      sum_a += a.at(r, c, ch);
      sum_b += b.at(r, c, ch);
    }
  const double mu_a = sum_a / static_cast<double>(n);
  const double mu_b = sum_b / static_cast<double>(n);
  double var_a = 0.0, var_b = 0.0, cov = 0.0;
  for (int r = 0; r < a.height; ++r)
    for (int c = 0; c < a.width; ++c) {
      const double da = a.at(r, c, ch) - mu_a;
      const double db = b.at(r, c, ch) - mu_b;
      var_a += da * da;
      var_b += db * db;
      cov += da * db;
    }
  var_a /= static_cast<double>(n);
  var_b /= static_cast<double>(n);
  cov /= static_cast<double>(n);
  return ssim_from_stats(mu_a, mu_b, var_a, var_b, cov, p);
}

double ssim_channel_gaussian(const Image& a, const Image& b, int ch, const SsimParams& p) {
  const int ws = p.window_size;
  const int half = ws / 2;
  if (ws % 2 == 0) throw ParamError("SSIM window size must be odd");
  if (a.height < ws || a.width < ws)
    throw ParamError("image smaller than the SSIM window");

  std::vector<double> kernel(static_cast<std::size_t>(ws) * ws);
  double ksum = 0.0;
  for (int i = 0; i < ws; ++i)
    for (int j = 0; j < ws; ++j) {
      const double dy = i - half, dx = j - half;
      const double w = std::exp(-(dx * dx + dy * dy) / (2.0 * p.sigma * p.sigma));
      kernel[static_cast<std::size_t>(i) * ws + j] = w;
      ksum += w;
    }
  for (double& w : kernel) w /= ksum;

  double total = 0.0;
  std::size_t count = 0;
  for (int r = half; r < a.height - half; ++r)
    for (int c = half; c < a.width - half; ++c) {
      double mu_a = 0.0, mu_b = 0.0;
      for (int i = 0; i < ws; ++i)
        for (int j = 0; j < ws; ++j) {
          const double w = kernel[static_cast<std::size_t>(i) * ws + j];
          mu_a += w * a.at(r + i - half, c + j - half, ch);
          mu_b += w * b.at(r + i - half, c + j - half, ch);
        }
      double var_a = 0.0, var_b = 0.0, cov = 0.0;
      for (int i = 0; i < ws; ++i)
        for (int j = 0; j < ws; ++j) {
          const double w = kernel[static_cast<std::size_t>(i) * ws + j];
          const double da = a.at(r + i - half, c + j - half, ch) - mu_a;
          const double db = b.at(r + i - half, c + j - half, ch) - mu_b;
          var_a += w * da * da;
          var_b += w * db * db;
          cov += w * da * db;
        }
      total += ssim_from_stats(mu_a, mu_b, var_a, var_b, cov, p);
      ++count;
    }
  return total / static_cast<double>(count);
}

}  // namespace

double ssim(const Image& a, const Image& b, const SsimParams& params) {
  if (!a.same_size(b))
    throw ShapeError("ssim inputs differ in dimensions: " + std::to_string(a.height) + "x" +
                     std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" +
                     std::to_string(b.width));
  double acc = 0.0;
  for (int ch = 0; ch < 3; ++ch)
    acc += params.window == SsimParams::Window::kGlobal
               ? ssim_channel_global(a, b, ch, params)
               : ssim_channel_gaussian(a, b, ch, params);
  return acc / 3.0;
}

}  // namespace sspb
