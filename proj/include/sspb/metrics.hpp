#pragma once

#include <optional>
#include <vector>

#include "sspb/image.hpp"

namespace sspb {

// Paired targets/predictions for the scalar metrics. Values for accuracy and
// AAD must lie in [0, 1].
struct ScalarBatch {
  std::vector<double> y;      // targets
  std::vector<double> y_hat;  // predictions
};

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // population (divide by m)
};

MeanStd mean_std_population(const std::vector<double>& xs);

// 100 - (sum |y_hat - y| / m) * 100. With a threshold, predictions are
// mapped to {0, 1} first (>= threshold reads as 1).
double accuracy_pct(const ScalarBatch& batch, std::optional<double> threshold = std::nullopt);

double mse_scalar(const ScalarBatch& batch);

struct ImageBatchMse {
  std::vector<double> per_image;
  double mean = 0.0;
  double stddev = 0.0;
};

// Per-image MSE over all pixels, plus the batch mean/std used for reporting.
ImageBatchMse mse_images(const std::vector<Image>& y, const std::vector<Image>& y_hat);

// Population standard deviation of the absolute errors |y_hat_i - y_i|.
double std_abs_err(const ScalarBatch& batch);

// Mean |y_hat_i - y_i|; multiplied by 360 when scale_to_degrees.
double aad(const ScalarBatch& batch, bool scale_to_degrees);

struct SsimParams {
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 255.0;
  enum class Window { kGlobal, kGaussian } window = Window::kGlobal;
  int window_size = 11;
  double sigma = 1.5;

  double c1() const { return (k1 * dynamic_range) * (k1 * dynamic_range); }
  double c2() const { return (k2 * dynamic_range) * (k2 * dynamic_range); }
};

// Per-channel SSIM averaged over the three channels. The global window
// applies the formula once to whole-image statistics; the gaussian window is
// the 11x11 / sigma 1.5 sliding-window variant (mean of the local SSIM map
// over valid positions).
double ssim(const Image& a, const Image& b, const SsimParams& params = {});

}  // namespace sspb
