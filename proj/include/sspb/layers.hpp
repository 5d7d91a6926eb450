#pragma once

#include <cstdint>
#include <vector>

#include "sspb/rng.hpp"
#include "sspb/tensor.hpp"

namespace sspb {

enum class Padding { kSame, kValid };

// Cross-correlation over an H x W x C input with Kh x Kw x C x F kernels.
// Same-padding output side is ceil(extent / stride); the extra pad cell goes
// to the bottom/right when the total is odd.
template <typename T>
TensorT<T> conv2d_forward(const TensorT<T>& input, const TensorT<T>& kernels,
                          const TensorT<T>& bias, int stride, Padding padding);

// Gradients for conv2d. Any of the output pointers may be null to skip that
// gradient (grad_input is skipped for the first layer of a network).
template <typename T>
void conv2d_backward(const TensorT<T>& input, const TensorT<T>& kernels,
                     int stride, Padding padding, const TensorT<T>& grad_out,
                     TensorT<T>* grad_input, TensorT<T>* grad_kernels,
                     TensorT<T>* grad_bias);

// y = x^T W + b with x of length N, W stored row-major N x M.
template <typename T>
TensorT<T> dense_forward(const TensorT<T>& x, const TensorT<T>& w,
                         const TensorT<T>& b);

template <typename T>
void dense_backward(const TensorT<T>& x, const TensorT<T>& w,
                    const TensorT<T>& grad_out, TensorT<T>* grad_x,
                    TensorT<T>* grad_w, TensorT<T>* grad_b);

template <typename T>
TensorT<T> relu_forward(const TensorT<T>& x);

template <typename T>
TensorT<T> relu_backward(const TensorT<T>& x, const TensorT<T>& grad_out);

// H x W x C -> C, per-channel mean over all spatial positions.
template <typename T>
TensorT<T> global_avg_pool_forward(const TensorT<T>& x);

template <typename T>
TensorT<T> global_avg_pool_backward(const Shape& in_shape,
                                    const TensorT<T>& grad_out);

// out[i, j, c] = in[i / factor, j / factor, c]
template <typename T>
TensorT<T> upsample_nearest_forward(const TensorT<T>& x, int factor);

template <typename T>
TensorT<T> upsample_nearest_backward(const Shape& in_shape, int factor,
                                     const TensorT<T>& grad_out);

// Inverted dropout: while training each element is zeroed with probability
// `rate` and survivors are scaled by 1/(1-rate), so inference is the
// identity. keep_mask (optional) records survivor flags for the backward
// pass.
template <typename T>
TensorT<T> dropout_forward(const TensorT<T>& x, double rate, bool training,
                           Rng& rng, std::vector<uint8_t>* keep_mask);

template <typename T>
TensorT<T> dropout_backward(const std::vector<uint8_t>& keep_mask, double rate,
                            const TensorT<T>& grad_out);

template <typename T>
TensorT<T> logistic_forward(const TensorT<T>& x);

// Takes the forward *outputs* y; d/dx = y (1 - y).
template <typename T>
TensorT<T> logistic_backward(const TensorT<T>& y, const TensorT<T>& grad_out);

// (1/m) sum (pred_i - target_i)^2 over all m elements.
template <typename T>
T mse_loss(const TensorT<T>& pred, const TensorT<T>& target);

template <typename T>
TensorT<T> mse_loss_backward(const TensorT<T>& pred, const TensorT<T>& target,
                             T upstream);

// Mean binary cross-entropy between probabilities in (0,1) and 0/1 targets.
// Probabilities are clamped away from {0,1} before the logs.
template <typename T>
T bce_loss(const TensorT<T>& pred, const TensorT<T>& target);

template <typename T>
TensorT<T> bce_loss_backward(const TensorT<T>& pred, const TensorT<T>& target,
                             T upstream);

}  // namespace sspb
