#include "sspb/image.hpp"

#include <algorithm>
#include <cmath>

#include "sspb/error.hpp"

namespace sspb {

Image::Image(int h, int w) : height(h), width(w) {
  if (h <= 0 || w <= 0) throw ParamError("image extents must be positive");
  pixels.assign(static_cast<std::size_t>(h) * w * 3, 0.0);
}

Image Image::filled(int h, int w, double v0, double v1, double v2) {
  Image img(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      img.at(r, c, 0) = v0;
      img.at(r, c, 1) = v1;
      img.at(r, c, 2) = v2;
    }
  return img;
}

Image rotate_image(const Image& img, double angle_deg) {
  if (img.order != ChannelOrder::kRgb)
    throw UsageError("rotate_image expects a canonical RGB image");
  if (!(angle_deg >= 0.0 && angle_deg < 360.0))
    throw ParamError("rotation angle must lie in [0, 360), got " + std::to_string(angle_deg));

  const double theta = angle_deg * (3.14159265358979323846 / 180.0);
  const double cs = std::cos(theta);
  const double sn = std::sin(theta);
  const double cx = (img.width - 1) * 0.5;
  const double cy = (img.height - 1) * 0.5;

  Image out(img.height, img.width);
  for (int r = 0; r < img.height; ++r) {
    const double y = r - cy;
    for (int c = 0; c < img.width; ++c) {
      const double x = c - cx;
      // inverse map: rotate the destination position by -theta
      const double sx = cx + cs * x + sn * y;
      const double sy = cy - sn * x + cs * y;
      const int x0 = static_cast<int>(std::floor(sx));
      const int y0 = static_cast<int>(std::floor(sy));
      const double dx = sx - x0;
      const double dy = sy - y0;
      const double w00 = (1.0 - dx) * (1.0 - dy);
      const double w01 = dx * (1.0 - dy);
      const double w10 = (1.0 - dx) * dy;
      const double w11 = dx * dy;
      for (int ch = 0; ch < 3; ++ch) {
        double v = 0.0;  // out-of-bounds neighbors contribute black
        if (y0 >= 0 && y0 < img.height) {
          if (x0 >= 0 && x0 < img.width) v += w00 * img.at(y0, x0, ch);
          if (x0 + 1 >= 0 && x0 + 1 < img.width) v += w01 * img.at(y0, x0 + 1, ch);
        }
        if (y0 + 1 >= 0 && y0 + 1 < img.height) {
          if (x0 >= 0 && x0 < img.width) v += w10 * img.at(y0 + 1, x0, ch);
          if (x0 + 1 >= 0 && x0 + 1 < img.width) v += w11 * img.at(y0 + 1, x0 + 1, ch);
        }
        out.at(r, c, ch) = v;
      }
    }
  }
  return out;
}

Image mask_patch(const Image& img, int top_row, int top_col, int side) {
  if (side < 1) throw ParamError("mask side must be >= 1");
  if (top_row < 0 || top_col < 0 || top_row + side > img.height || top_col + side > img.width)
    throw ParamError("mask patch exceeds image bounds: top (" + std::to_string(top_row) + ", " +
                     std::to_string(top_col) + ") side " + std::to_string(side) + " in " +
                     std::to_string(img.height) + "x" + std::to_string(img.width));
  Image out = img;
  for (int r = top_row; r < top_row + side; ++r)
    for (int c = top_col; c < top_col + side; ++c)
      for (int ch = 0; ch < 3; ++ch) out.at(r, c, ch) = 0.0;
  return out;
}

namespace {

bool patches_overlap(int ar, int ac, int br, int bc, int side) {
  return std::abs(ar - br) < side && std::abs(ac - bc) < side;
}

void swap_patches(Image& img, const Swap& s) {
  for (int r = 0; r < s.side; ++r)
    for (int c = 0; c < s.side; ++c)
      for (int ch = 0; ch < 3; ++ch)
        std::swap(img.at(s.a_row + r, s.a_col + c, ch), img.at(s.b_row + r, s.b_col + c, ch));
}

}  // namespace

std::pair<Image, SwapRecord> corrupt_swap(const Image& img, int n_swaps, int patch_side,
                                          Rng& rng) {
  if (n_swaps < 0) throw ParamError("swap count must be >= 0");
  if (patch_side < 1 || 2 * patch_side > std::min(img.height, img.width))
    throw ParamError("swap patch side " + std::to_string(patch_side) +
                     " infeasible for image " + std::to_string(img.height) + "x" +
                     std::to_string(img.width));

  const int row_choices = img.height - patch_side + 1;
  const int col_choices = img.width - patch_side + 1;
  Image out = img;
  SwapRecord record;
  record.swaps.reserve(static_cast<std::size_t>(n_swaps));
  for (int i = 0; i < n_swaps; ++i) {
    Swap s{};
    s.side = patch_side;
    s.a_row = rng.uniform_int(row_choices);
    s.a_col = rng.uniform_int(col_choices);
    int attempts = 0;
    do {
      if (++attempts > 1000)
        throw ParamError("could not sample a disjoint patch pair after 1000 attempts");
      s.b_row = rng.uniform_int(row_choices);
      s.b_col = rng.uniform_int(col_choices);
    } while (patches_overlap(s.a_row, s.a_col, s.b_row, s.b_col, patch_side));
    swap_patches(out, s);
    record.swaps.push_back(s);
  }
  return {std::move(out), std::move(record)};
}

Image uncorrupt(const Image& img, const SwapRecord& record) {
  Image out = img;
  for (auto it = record.swaps.rbegin(); it != record.swaps.rend(); ++it) {
    const Swap& s = *it;
    if (s.a_row < 0 || s.a_col < 0 || s.b_row < 0 || s.b_col < 0 ||
        s.a_row + s.side > img.height || s.a_col + s.side > img.width ||
        s.b_row + s.side > img.height || s.b_col + s.side > img.width)
      throw ParamError("swap record does not fit image dimensions");
    swap_patches(out, s);
  }
  return out;
}

Image swap_red_blue(const Image& img) {
  Image out = img;
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) std::swap(out.at(r, c, 0), out.at(r, c, 2));
  out.order = img.order == ChannelOrder::kRgb ? ChannelOrder::kBgr : ChannelOrder::kRgb;
  return out;
}

Image preprocess(const Image& img, const PreprocessParams& params) {
  if (img.order != ChannelOrder::kRgb)
    throw UsageError("preprocess input is already BGR-tagged; refusing to preprocess twice");
  Image out = swap_red_blue(img);
  for (int r = 0; r < out.height; ++r)
    for (int c = 0; c < out.width; ++c) {
      out.at(r, c, 0) -= params.mean_b;
      out.at(r, c, 1) -= params.mean_g;
      out.at(r, c, 2) -= params.mean_r;
    }
  return out;
}

Image deprocess(const Image& img, const PreprocessParams& params, bool clamp) {
  if (img.order != ChannelOrder::kBgr)
    throw UsageError("deprocess expects a BGR-tagged (preprocessed) image");
  Image shifted = img;
  for (int r = 0; r < shifted.height; ++r)
    for (int c = 0; c < shifted.width; ++c) {
      shifted.at(r, c, 0) += params.mean_b;
      shifted.at(r, c, 1) += params.mean_g;
      shifted.at(r, c, 2) += params.mean_r;
    }
  Image out = swap_red_blue(shifted);
  if (clamp)
    for (double& v : out.pixels) v = std::clamp(v, 0.0, 255.0);
  return out;
}

Tensor image_to_tensor(const Image& img) {
  Tensor t({static_cast<std::size_t>(img.height), static_cast<std::size_t>(img.width), 3});
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    t.data[i] = static_cast<float>(img.pixels[i]);
  return t;
}

Image tensor_to_image(const Tensor& t, ChannelOrder order) {
  if (t.rank() != 3 || t.shape[2] != 3)
    throw ShapeError("tensor_to_image expects H x W x 3, got " + shape_str(t.shape));
  Image img(static_cast<int>(t.shape[0]), static_cast<int>(t.shape[1]));
  img.order = order;
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    img.pixels[i] = static_cast<double>(t.data[i]);
  return img;
}

}  // namespace sspb
