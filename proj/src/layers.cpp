#include "sspb/layers.hpp"

#include <algorithm>
#include <cmath>

namespace sspb {

namespace {

struct ConvGeom {
  int out_h, out_w;
  int pad_top, pad_left;
};

ConvGeom conv_geometry(int h, int w, int kh, int kw, int stride, Padding padding) {
  ConvGeom g{};
  if (padding == Padding::kSame) {
    g.out_h = (h + stride - 1) / stride;
    g.out_w = (w + stride - 1) / stride;
    int pad_h = std::max((g.out_h - 1) * stride + kh - h, 0);
    int pad_w = std::max((g.out_w - 1) * stride + kw - w, 0);
    g.pad_top = pad_h / 2;
    g.pad_left = pad_w / 2;
  } else {
    if (h < kh || w < kw)
      throw ShapeError("valid-padding conv needs input at least kernel-sized, got input " +
                       std::to_string(h) + "x" + std::to_string(w) + " kernel " +
                       std::to_string(kh) + "x" + std::to_string(kw));
    g.out_h = (h - kh) / stride + 1;
    g.out_w = (w - kw) / stride + 1;
    g.pad_top = 0;
    g.pad_left = 0;
  }
  return g;
}

template <typename T>
void check_conv_shapes(const TensorT<T>& input, const TensorT<T>& kernels,
                       const TensorT<T>* bias, int stride) {
  if (input.rank() != 3)
    throw ShapeError("conv2d input must be H x W x C, got " + shape_str(input.shape));
  if (kernels.rank() != 4)
    throw ShapeError("conv2d kernels must be Kh x Kw x C x F, got " + shape_str(kernels.shape));
  if (input.shape[2] != kernels.shape[2])
    throw ShapeError("conv2d channel mismatch: input has " + std::to_string(input.shape[2]) +
                     " channels, kernels expect " + std::to_string(kernels.shape[2]));
  if (bias && (bias->rank() != 1 || bias->shape[0] != kernels.shape[3]))
    throw ShapeError("conv2d bias must have one value per filter, got " + shape_str(bias->shape));
  if (stride < 1) throw ParamError("conv2d stride must be >= 1");
}

}  // namespace

template <typename T>
TensorT<T> conv2d_forward(const TensorT<T>& input, const TensorT<T>& kernels,
                          const TensorT<T>& bias, int stride, Padding padding) {
  check_conv_shapes(input, kernels, &bias, stride);
  if (!input.all_finite()) throw NumericError("conv2d input contains NaN or Inf");

  const int h = static_cast<int>(input.shape[0]);
  const int w = static_cast<int>(input.shape[1]);
  const int c = static_cast<int>(input.shape[2]);
  const int kh = static_cast<int>(kernels.shape[0]);
  const int kw = static_cast<int>(kernels.shape[1]);
  const int f = static_cast<int>(kernels.shape[3]);
  const ConvGeom g = conv_geometry(h, w, kh, kw, stride, padding);

  TensorT<T> out({static_cast<std::size_t>(g.out_h), static_cast<std::size_t>(g.out_w),
                  static_cast<std::size_t>(f)});

  for (int oh = 0; oh < g.out_h; ++oh) {
    const int ih0 = oh * stride - g.pad_top;
    for (int ow = 0; ow < g.out_w; ++ow) {
      const int iw0 = ow * stride - g.pad_left;
      T* out_px = &out.data[(static_cast<std::size_t>(oh) * g.out_w + ow) * f];
      for (int fi = 0; fi < f; ++fi) out_px[fi] = bias.data[fi];
      for (int ki = 0; ki < kh; ++ki) {
        const int ih = ih0 + ki;
        if (ih < 0 || ih >= h) continue;
        for (int kj = 0; kj < kw; ++kj) {
          const int iw = iw0 + kj;
          if (iw < 0 || iw >= w) continue;
          const T* in_px = &input.data[(static_cast<std::size_t>(ih) * w + iw) * c];
          const T* k_base = &kernels.data[((static_cast<std::size_t>(ki) * kw + kj) * c) * f];
          for (int ci = 0; ci < c; ++ci) {
            const T a = in_px[ci];
            const T* k_row = k_base + static_cast<std::size_t>(ci) * f;
            for (int fi = 0; fi < f; ++fi) out_px[fi] += a * k_row[fi];
          }
        }
      }
    }
  }
  return out;
}

template <typename T>
void conv2d_backward(const TensorT<T>& input, const TensorT<T>& kernels,
                     int stride, Padding padding, const TensorT<T>& grad_out,
                     TensorT<T>* grad_input, TensorT<T>* grad_kernels,
                     TensorT<T>* grad_bias) {
  check_conv_shapes(input, kernels, static_cast<const TensorT<T>*>(nullptr), stride);

  const int h = static_cast<int>(input.shape[0]);
  const int w = static_cast<int>(input.shape[1]);
  const int c = static_cast<int>(input.shape[2]);
  const int kh = static_cast<int>(kernels.shape[0]);
  const int kw = static_cast<int>(kernels.shape[1]);
  const int f = static_cast<int>(kernels.shape[3]);
  const ConvGeom g = conv_geometry(h, w, kh, kw, stride, padding);

  Shape expect{static_cast<std::size_t>(g.out_h), static_cast<std::size_t>(g.out_w),
               static_cast<std::size_t>(f)};
  if (grad_out.shape != expect)
    throw ShapeError("conv2d grad_out shape " + shape_str(grad_out.shape) +
                     " does not match forward output " + shape_str(expect));

  if (grad_input) *grad_input = TensorT<T>(input.shape);
  if (grad_kernels) *grad_kernels = TensorT<T>(kernels.shape);
  if (grad_bias) *grad_bias = TensorT<T>({static_cast<std::size_t>(f)});

  for (int oh = 0; oh < g.out_h; ++oh) {
    const int ih0 = oh * stride - g.pad_top;
    for (int ow = 0; ow < g.out_w; ++ow) {
      const int iw0 = ow * stride - g.pad_left;
      const T* go = &grad_out.data[(static_cast<std::size_t>(oh) * g.out_w + ow) * f];
      if (grad_bias) {
        T* gb = grad_bias->data.data();
        for (int fi = 0; fi < f; ++fi) gb[fi] += go[fi];
      }
      for (int ki = 0; ki < kh; ++ki) {
        const int ih = ih0 + ki;
        if (ih < 0 || ih >= h) continue;
        for (int kj = 0; kj < kw; ++kj) {
          const int iw = iw0 + kj;
          if (iw < 0 || iw >= w) continue;
          const std::size_t in_off = (static_cast<std::size_t>(ih) * w + iw) * c;
          const std::size_t k_off = ((static_cast<std::size_t>(ki) * kw + kj) * c) * f;
          const T* in_px = &input.data[in_off];
          for (int ci = 0; ci < c; ++ci) {
            const T* k_row = &kernels.data[k_off + static_cast<std::size_t>(ci) * f];
            T acc = 0;
            if (grad_kernels) {
              T* gk_row = &grad_kernels->data[k_off + static_cast<std::size_t>(ci) * f];
              const T a = in_px[ci];
              for (int fi = 0; fi < f; ++fi) {
                const T gv = go[fi];
                acc += gv * k_row[fi];
                gk_row[fi] += gv * a;
              }
            } else {
              for (int fi = 0; fi < f; ++fi) acc += go[fi] * k_row[fi];
            }
            if (grad_input) grad_input->data[in_off + ci] += acc;
          }
        }
      }
    }
  }
}

template <typename T>
TensorT<T> dense_forward(const TensorT<T>& x, const TensorT<T>& w,
                         const TensorT<T>& b) {
  if (x.rank() != 1 || w.rank() != 2 || b.rank() != 1)
    throw ShapeError("dense expects vector input, matrix weights, vector bias");
  const std::size_t n = x.shape[0], m = w.shape[1];
  if (w.shape[0] != n)
    throw ShapeError("dense inner extents differ: input " + std::to_string(n) +
                     " vs weights " + shape_str(w.shape));
  if (b.shape[0] != m)
    throw ShapeError("dense bias length " + std::to_string(b.shape[0]) +
                     " does not match output dim " + std::to_string(m));

  TensorT<T> out({m});
  for (std::size_t j = 0; j < m; ++j) out.data[j] = b.data[j];
  for (std::size_t i = 0; i < n; ++i) {
    const T a = x.data[i];
    const T* w_row = &w.data[i * m];
    for (std::size_t j = 0; j < m; ++j) out.data[j] += a * w_row[j];
  }
  return out;
}

template <typename T>
void dense_backward(const TensorT<T>& x, const TensorT<T>& w,
                    const TensorT<T>& grad_out, TensorT<T>* grad_x,
                    TensorT<T>* grad_w, TensorT<T>* grad_b) {
  const std::size_t n = x.shape[0], m = w.shape[1];
  if (grad_out.rank() != 1 || grad_out.shape[0] != m)
    throw ShapeError("dense grad_out shape " + shape_str(grad_out.shape) +
                     " does not match output dim " + std::to_string(m));
  if (grad_b) *grad_b = grad_out;
  if (grad_x) *grad_x = TensorT<T>({n});
  if (grad_w) *grad_w = TensorT<T>(w.shape);
  for (std::size_t i = 0; i < n; ++i) {
    const T* w_row = &w.data[i * m];
    T acc = 0;
    if (grad_w) {
      T* gw_row = &grad_w->data[i * m];
      const T a = x.data[i];
      for (std::size_t j = 0; j < m; ++j) {
        acc += grad_out.data[j] * w_row[j];
        gw_row[j] += grad_out.data[j] * a;
      }
    } else {
      for (std::size_t j = 0; j < m; ++j) acc += grad_out.data[j] * w_row[j];
    }
    if (grad_x) grad_x->data[i] = acc;
  }
}

template <typename T>
TensorT<T> relu_forward(const TensorT<T>& x) {
  TensorT<T> out(x.shape);
  for (std::size_t i = 0; i < x.size(); ++i) out.data[i] = x.data[i] > 0 ? x.data[i] : T(0);
  return out;
}

template <typename T>
TensorT<T> relu_backward(const TensorT<T>& x, const TensorT<T>& grad_out) {
  if (!x.same_shape(grad_out)) throw ShapeError("relu grad shape mismatch");
  TensorT<T> g(x.shape);
  for (std::size_t i = 0; i < x.size(); ++i) g.data[i] = x.data[i] > 0 ? grad_out.data[i] : T(0);
  return g;
}

template <typename T>
TensorT<T> global_avg_pool_forward(const TensorT<T>& x) {
  if (x.rank() != 3)
    throw ShapeError("global_avg_pool input must be H x W x C, got " + shape_str(x.shape));
  const std::size_t hw = x.shape[0] * x.shape[1];
  const std::size_t c = x.shape[2];
  TensorT<T> out({c});
  std::vector<double> acc(c, 0.0);
  for (std::size_t p = 0; p < hw; ++p)
    for (std::size_t ci = 0; ci < c; ++ci) acc[ci] += static_cast<double>(x.data[p * c + ci]);
  for (std::size_t ci = 0; ci < c; ++ci)
    out.data[ci] = static_cast<T>(acc[ci] / static_cast<double>(hw));
  return out;
}

template <typename T>
TensorT<T> global_avg_pool_backward(const Shape& in_shape, const TensorT<T>& grad_out) {
  if (in_shape.size() != 3) throw ShapeError("global_avg_pool input must be rank 3");
  if (grad_out.rank() != 1 || grad_out.shape[0] != in_shape[2])
    throw ShapeError("global_avg_pool grad_out shape mismatch");
  const std::size_t hw = in_shape[0] * in_shape[1];
  const std::size_t c = in_shape[2];
  TensorT<T> g(in_shape);
  const double inv = 1.0 / static_cast<double>(hw);
  for (std::size_t p = 0; p < hw; ++p)
    for (std::size_t ci = 0; ci < c; ++ci)
      g.data[p * c + ci] = static_cast<T>(static_cast<double>(grad_out.data[ci]) * inv);
  return g;
}

template <typename T>
TensorT<T> upsample_nearest_forward(const TensorT<T>& x, int factor) {
  if (x.rank() != 3)
    throw ShapeError("upsample_nearest input must be H x W x C, got " + shape_str(x.shape));
  if (factor < 1) throw ParamError("upsample factor must be >= 1");
  const std::size_t h = x.shape[0], w = x.shape[1], c = x.shape[2];
  const std::size_t fu = static_cast<std::size_t>(factor);
  TensorT<T> out({h * fu, w * fu, c});
  for (std::size_t i = 0; i < h * fu; ++i) {
    const std::size_t si = i / fu;
    for (std::size_t j = 0; j < w * fu; ++j) {
      const std::size_t sj = j / fu;
      const T* src = &x.data[(si * w + sj) * c];
      T* dst = &out.data[(i * w * fu + j) * c];
      for (std::size_t ci = 0; ci < c; ++ci) dst[ci] = src[ci];
    }
  }
  return out;
}

template <typename T>
TensorT<T> upsample_nearest_backward(const Shape& in_shape, int factor,
                                     const TensorT<T>& grad_out) {
  if (in_shape.size() != 3) throw ShapeError("upsample input must be rank 3");
  const std::size_t h = in_shape[0], w = in_shape[1], c = in_shape[2];
  const std::size_t fu = static_cast<std::size_t>(factor);
  if (grad_out.rank() != 3 || grad_out.shape[0] != h * fu || grad_out.shape[1] != w * fu ||
      grad_out.shape[2] != c)
    throw ShapeError("upsample grad_out shape mismatch");
  TensorT<T> g(in_shape);
  for (std::size_t i = 0; i < h * fu; ++i) {
    const std::size_t si = i / fu;
    for (std::size_t j = 0; j < w * fu; ++j) {
      const std::size_t sj = j / fu;
      const T* src = &grad_out.data[(i * w * fu + j) * c];
      T* dst = &g.data[(si * w + sj) * c];
      for (std::size_t ci = 0; ci < c; ++ci) dst[ci] += src[ci];
    }
  }
  return g;
}

template <typename T>
TensorT<T> dropout_forward(const TensorT<T>& x, double rate, bool training,
                           Rng& rng, std::vector<uint8_t>* keep_mask) {
  if (rate < 0.0 || rate >= 1.0)
    throw ParamError("dropout rate must be in [0, 1), got " + std::to_string(rate));
  if (!training) {
    if (keep_mask) keep_mask->assign(x.size(), 1);
    return x;
  }
  const T scale = static_cast<T>(1.0 / (1.0 - rate));
  TensorT<T> out(x.shape);
  if (keep_mask) keep_mask->assign(x.size(), 1);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const bool keep = rng.uniform() >= rate;
    out.data[i] = keep ? x.data[i] * scale : T(0);
    if (keep_mask) (*keep_mask)[i] = keep ? 1 : 0;
  }
  return out;
}

template <typename T>
TensorT<T> dropout_backward(const std::vector<uint8_t>& keep_mask, double rate,
                            const TensorT<T>& grad_out) {
  if (keep_mask.size() != grad_out.size())
    throw ShapeError("dropout mask length does not match grad_out");
  const T scale = static_cast<T>(1.0 / (1.0 - rate));
  TensorT<T> g(grad_out.shape);
  for (std::size_t i = 0; i < grad_out.size(); ++i)
    g.data[i] = keep_mask[i] ? grad_out.data[i] * scale : T(0);
  return g;
}

namespace {
// Outputs clamped to [eps, 1-eps]: keeps the value strictly inside (0, 1)
// in 32-bit storage and keeps y(1-y) away from exact zero, so a saturated
// unit still emits a recovery gradient instead of freezing.
constexpr double kLogisticEps = 1e-7;
}  // namespace

template <typename T>
TensorT<T> logistic_forward(const TensorT<T>& x) {
  TensorT<T> out(x.shape);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = static_cast<double>(x.data[i]);
    // branch keeps exp() argument non-positive, so no overflow
    const double y = v >= 0 ? 1.0 / (1.0 + std::exp(-v))
                            : std::exp(v) / (1.0 + std::exp(v));
    out.data[i] = static_cast<T>(std::clamp(y, kLogisticEps, 1.0 - kLogisticEps));
  }
  return out;
}

template <typename T>
TensorT<T> logistic_backward(const TensorT<T>& y, const TensorT<T>& grad_out) {
  if (!y.same_shape(grad_out)) throw ShapeError("logistic grad shape mismatch");
  TensorT<T> g(y.shape);
  for (std::size_t i = 0; i < y.size(); ++i)
    g.data[i] = grad_out.data[i] * y.data[i] * (T(1) - y.data[i]);
  return g;
}

template <typename T>
T mse_loss(const TensorT<T>& pred, const TensorT<T>& target) {
  if (!pred.same_shape(target))
    throw ShapeError("mse_loss shapes differ: " + shape_str(pred.shape) + " vs " +
                     shape_str(target.shape));
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = static_cast<double>(pred.data[i]) - static_cast<double>(target.data[i]);
    acc += d * d;
  }
  return static_cast<T>(acc / static_cast<double>(pred.size()));
}

template <typename T>
TensorT<T> mse_loss_backward(const TensorT<T>& pred, const TensorT<T>& target,
                             T upstream) {
  if (!pred.same_shape(target)) throw ShapeError("mse_loss shapes differ");
  TensorT<T> g(pred.shape);
  const T scale = upstream * static_cast<T>(2.0 / static_cast<double>(pred.size()));
  for (std::size_t i = 0; i < pred.size(); ++i)
    g.data[i] = scale * (pred.data[i] - target.data[i]);
  return g;
}

namespace {
constexpr double kBceEps = 1e-7;
}

template <typename T>
T bce_loss(const TensorT<T>& pred, const TensorT<T>& target) {
  if (!pred.same_shape(target))
    throw ShapeError("bce_loss shapes differ: " + shape_str(pred.shape) + " vs " +
                     shape_str(target.shape));
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = std::clamp(static_cast<double>(pred.data[i]), kBceEps, 1.0 - kBceEps);
    const double y = static_cast<double>(target.data[i]);
    acc += -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
  }
  return static_cast<T>(acc / static_cast<double>(pred.size()));
}

template <typename T>
TensorT<T> bce_loss_backward(const TensorT<T>& pred, const TensorT<T>& target,
                             T upstream) {
  if (!pred.same_shape(target)) throw ShapeError("bce_loss shapes differ");
  TensorT<T> g(pred.shape);
  const double scale = static_cast<double>(upstream) / static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = std::clamp(static_cast<double>(pred.data[i]), kBceEps, 1.0 - kBceEps);
    const double y = static_cast<double>(target.data[i]);
    g.data[i] = static_cast<T>(scale * (p - y) / (p * (1.0 - p)));
  }
  return g;
}

#define SSPB_INSTANTIATE_LAYERS(T)                                                        \
  template TensorT<T> conv2d_forward<T>(const TensorT<T>&, const TensorT<T>&,            \
                                        const TensorT<T>&, int, Padding);                \
  template void conv2d_backward<T>(const TensorT<T>&, const TensorT<T>&, int, Padding,   \
                                   const TensorT<T>&, TensorT<T>*, TensorT<T>*,          \
                                   TensorT<T>*);                                         \
  template TensorT<T> dense_forward<T>(const TensorT<T>&, const TensorT<T>&,             \
                                       const TensorT<T>&);                               \
  template void dense_backward<T>(const TensorT<T>&, const TensorT<T>&,                  \
                                  const TensorT<T>&, TensorT<T>*, TensorT<T>*,           \
                                  TensorT<T>*);                                          \
  template TensorT<T> relu_forward<T>(const TensorT<T>&);                                \
  template TensorT<T> relu_backward<T>(const TensorT<T>&, const TensorT<T>&);            \
  template TensorT<T> global_avg_pool_forward<T>(const TensorT<T>&);                     \
  template TensorT<T> global_avg_pool_backward<T>(const Shape&, const TensorT<T>&);      \
  template TensorT<T> upsample_nearest_forward<T>(const TensorT<T>&, int);               \
  template TensorT<T> upsample_nearest_backward<T>(const Shape&, int,                    \
                                                   const TensorT<T>&);                   \
  template TensorT<T> dropout_forward<T>(const TensorT<T>&, double, bool, Rng&,          \
                                         std::vector<uint8_t>*);                         \
  template TensorT<T> dropout_backward<T>(const std::vector<uint8_t>&, double,           \
                                          const TensorT<T>&);                            \
  template TensorT<T> logistic_forward<T>(const TensorT<T>&);                            \
  template TensorT<T> logistic_backward<T>(const TensorT<T>&, const TensorT<T>&);        \
  template T mse_loss<T>(const TensorT<T>&, const TensorT<T>&);                          \
  template TensorT<T> mse_loss_backward<T>(const TensorT<T>&, const TensorT<T>&, T);     \
  template T bce_loss<T>(const TensorT<T>&, const TensorT<T>&);                          \
  template TensorT<T> bce_loss_backward<T>(const TensorT<T>&, const TensorT<T>&, T);

SSPB_INSTANTIATE_LAYERS(float)
SSPB_INSTANTIATE_LAYERS(double)

#undef SSPB_INSTANTIATE_LAYERS

}  // namespace sspb
