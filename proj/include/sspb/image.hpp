#pragma once

#include <utility>
#include <vector>

#include "sspb/rng.hpp"
#include "sspb/tensor.hpp"

namespace sspb {

enum class ChannelOrder { kRgb, kBgr };

// H x W x 3 raster of real-valued pixels, row-major, channel-interleaved.
// Canonical images are RGB with values in [0, 255]; preprocessed images are
// BGR and zero-centered (values go negative). The order tag tracks which
// state a given image is in.
struct Image {
  int height = 0;
  int width = 0;
  ChannelOrder order = ChannelOrder::kRgb;
  std::vector<double> pixels;  // height * width * 3

  Image() = default;
  Image(int h, int w);

  double& at(int r, int c, int ch) { return pixels[(static_cast<std::size_t>(r) * width + c) * 3 + ch]; }
  double at(int r, int c, int ch) const { return pixels[(static_cast<std::size_t>(r) * width + c) * 3 + ch]; }

  static Image filled(int h, int w, double v0, double v1, double v2);
  bool same_size(const Image& o) const { return height == o.height && width == o.width; }
};

// Per-channel means subtracted during preprocessing, in B, G, R order.
// Defaults are the ImageNet-lineage constants; overridable via config.
struct PreprocessParams {
  double mean_b = 103.939;
  double mean_g = 116.779;
  double mean_r = 123.68;
};

struct Swap {
  int a_row, a_col;
  int b_row, b_col;
  int side;
};

// Ordered list of patch transpositions, in application order. Each entry's
// two patches are disjoint and in-bounds, so every swap is an exact pixel
// permutation.
struct SwapRecord {
  std::vector<Swap> swaps;
};

// Rotation about the image center by angle_deg in [0, 360), inverse-mapped
// with bilinear sampling; source positions outside the image read as black.
Image rotate_image(const Image& img, double angle_deg);

// Sets the side x side patch at (top_row, top_col) to (0,0,0); everything
// else is copied bit-for-bit.
Image mask_patch(const Image& img, int top_row, int top_col, int side);

// n_swaps sequential transpositions of two uniformly sampled, non-overlapping
// patch positions. Requires 2 * patch_side <= min(H, W) so a disjoint pair
// always exists.
std::pair<Image, SwapRecord> corrupt_swap(const Image& img, int n_swaps, int patch_side,
                                          Rng& rng);

// Applies the recorded swaps in reverse order; exact inverse of corrupt_swap.
Image uncorrupt(const Image& img, const SwapRecord& record);

// Channel flip 0 <-> 2 with the order tag toggled.
Image swap_red_blue(const Image& img);

// RGB -> BGR, then per-channel mean subtraction.
Image preprocess(const Image& img, const PreprocessParams& params);

// Means re-added, channels flipped back to RGB. Clamping to [0, 255] is a
// separate explicit step for display/comparison.
Image deprocess(const Image& img, const PreprocessParams& params, bool clamp = false);

Tensor image_to_tensor(const Image& img);
Image tensor_to_image(const Tensor& t, ChannelOrder order);

}  // namespace sspb
