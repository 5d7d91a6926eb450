#include "sspb/autodiff.hpp"

#include <memory>
#include <utility>

namespace sspb {

template <typename T>
int Tape<T>::push(TensorT<T> value, bool requires_grad,
                  std::function<void(Tape&)> backprop) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

template <typename T>
void Tape<T>::accumulate(int id, const TensorT<T>& g) {
  Node& n = nodes_[id];
  if (n.grad.data.empty()) {
    n.grad = g;
    return;
  }
  for (std::size_t i = 0; i < g.size(); ++i) n.grad.data[i] += g.data[i];
}

template <typename T>
const TensorT<T>& Tape<T>::grad(int id) {
  Node& n = nodes_[id];
  if (n.grad.data.empty()) n.grad = TensorT<T>(n.value.shape);
  return n.grad;
}

template <typename T>
int Tape<T>::leaf(TensorT<T> value, bool requires_grad) {
  return push(std::move(value), requires_grad, nullptr);
}

template <typename T>
int Tape<T>::conv2d(int input, int kernels, int bias, int stride, Padding padding) {
  TensorT<T> out = conv2d_forward(value(input), value(kernels), value(bias), stride, padding);
  const bool rg = wants_grad(input) || wants_grad(kernels) || wants_grad(bias);
  int id = push(std::move(out), rg, nullptr);
  if (rg) {
    nodes_[id].backprop = [=](Tape& t) {
      TensorT<T> gi, gk, gb;
      conv2d_backward(t.value(input), t.value(kernels), stride, padding, t.nodes_[id].grad,
                      t.wants_grad(input) ? &gi : nullptr,
                      t.wants_grad(kernels) ? &gk : nullptr,
                      t.wants_grad(bias) ? &gb : nullptr);
      if (t.wants_grad(input)) t.accumulate(input, gi);
      if (t.wants_grad(kernels)) t.accumulate(kernels, gk);
      if (t.wants_grad(bias)) t.accumulate(bias, gb);
    };
  }
  return id;
}

template <typename T>
int Tape<T>::dense(int input, int weights, int bias) {
  TensorT<T> out = dense_forward(value(input), value(weights), value(bias));
  const bool rg = wants_grad(input) || wants_grad(weights) || wants_grad(bias);
  int id = push(std::move(out), rg, nullptr);
  if (rg) {
    nodes_[id].backprop = [=](Tape& t) {
      TensorT<T> gx, gw, gb;
      dense_backward(t.value(input), t.value(weights), t.nodes_[id].grad,
                     t.wants_grad(input) ? &gx : nullptr,
                     t.wants_grad(weights) ? &gw : nullptr,
                     t.wants_grad(bias) ? &gb : nullptr);
      if (t.wants_grad(input)) t.accumulate(input, gx);
      if (t.wants_grad(weights)) t.accumulate(weights, gw);
      if (t.wants_grad(bias)) t.accumulate(bias, gb);
    };
  }
  return id;
}

template <typename T>
int Tape<T>::relu(int input) {
  TensorT<T> out = relu_forward(value(input));
  const bool rg = wants_grad(input);
  int id = push(std::move(out), rg, nullptr);
  if (rg) {
    nodes_[id].backprop = [=](Tape& t) {
      t.accumulate(input, relu_backward(t.value(input), t.nodes_[id].grad));
    };
  }
  return id;
}

template <typename T>
int Tape<T>::global_avg_pool(int input) {
  TensorT<T> out = global_avg_pool_forward(value(input));
  const bool rg = wants_grad(input);
  int id = push(std::move(out), rg, nullptr);
  if (rg) {
    Shape in_shape = value(input).shape;
    nodes_[id].backprop = [=](Tape& t) {
      t.accumulate(input, global_avg_pool_backward<T>(in_shape, t.nodes_[id].grad));
    };
  }
  return id;
}

template <typename T>
int Tape<T>::upsample_nearest(int input, int factor) {
  TensorT<T> out = upsample_nearest_forward(value(input), factor);
  const bool rg = wants_grad(input);
  int id = push(std::move(out), rg, nullptr);
  if (rg) {
    Shape in_shape = value(input).shape;
    nodes_[id].backprop = [=](Tape& t) {
      t.accumulate(input, upsample_nearest_backward<T>(in_shape, factor, t.nodes_[id].grad));
    };
  }
  return id;
}

template <typename T>
int Tape<T>::dropout(int input, double rate, bool training, Rng& rng) {
  auto mask = std::make_shared<std::vector<uint8_t>>();
  TensorT<T> out = dropout_forward(value(input), rate, training, rng, mask.get());
  const bool rg = wants_grad(input);
  int id = push(std::move(out), rg, nullptr);
  if (rg) {
    nodes_[id].backprop = [=](Tape& t) {
      if (!training) {
        t.accumulate(input, t.nodes_[id].grad);
      } else {
        t.accumulate(input, dropout_backward<T>(*mask, rate, t.nodes_[id].grad));
      }
    };
  }
  return id;
}

template <typename T>
int Tape<T>::logistic(int input) {
  TensorT<T> out = logistic_forward(value(input));
  const bool rg = wants_grad(input);
  int id = push(std::move(out), rg, nullptr);
  if (rg) {
    nodes_[id].backprop = [=](Tape& t) {
      t.accumulate(input, logistic_backward(t.value(id), t.nodes_[id].grad));
    };
  }
  return id;
}

template <typename T>
int Tape<T>::mse(int pred, int target) {
  T loss = mse_loss(value(pred), value(target));
  const bool rg = wants_grad(pred) || wants_grad(target);
  int id = push(TensorT<T>::scalar(loss), rg, nullptr);
  if (rg) {
    nodes_[id].backprop = [=](Tape& t) {
      const T up = t.nodes_[id].grad.data[0];
      if (t.wants_grad(pred))
        t.accumulate(pred, mse_loss_backward(t.value(pred), t.value(target), up));
      if (t.wants_grad(target))
        t.accumulate(target, mse_loss_backward(t.value(target), t.value(pred), up));
    };
  }
  return id;
}

template <typename T>
int Tape<T>::bce(int pred, int target) {
  T loss = bce_loss(value(pred), value(target));
  const bool rg = wants_grad(pred);
  int id = push(TensorT<T>::scalar(loss), rg, nullptr);
  if (rg) {
    nodes_[id].backprop = [=](Tape& t) {
      const T up = t.nodes_[id].grad.data[0];
      t.accumulate(pred, bce_loss_backward(t.value(pred), t.value(target), up));
    };
  }
  return id;
}

template <typename T>
int Tape<T>::sum_scalars(const std::vector<int>& ids) {
  if (ids.empty()) throw UsageError("sum_scalars needs at least one node");
  double acc = 0.0;
  bool rg = false;
  for (int i : ids) {
    if (value(i).size() != 1) throw UsageError("sum_scalars operands must be scalars");
    acc += static_cast<double>(value(i).data[0]);
    rg = rg || wants_grad(i);
  }
  std::vector<int> inputs = ids;
  int id = push(TensorT<T>::scalar(static_cast<T>(acc)), rg, nullptr);
  if (rg) {
    nodes_[id].backprop = [=](Tape& t) {
      const TensorT<T>& g = t.nodes_[id].grad;
      for (int i : inputs)
        if (t.wants_grad(i)) t.accumulate(i, g);
    };
  }
  return id;
}

template <typename T>
int Tape<T>::scale(int input, T factor) {
  TensorT<T> out(value(input).shape);
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = value(input).data[i] * factor;
  const bool rg = wants_grad(input);
  int id = push(std::move(out), rg, nullptr);
  if (rg) {
    nodes_[id].backprop = [=](Tape& t) {
      TensorT<T> g(t.nodes_[id].grad.shape);
      for (std::size_t i = 0; i < g.size(); ++i) g.data[i] = t.nodes_[id].grad.data[i] * factor;
      t.accumulate(input, g);
    };
  }
  return id;
}

template <typename T>
void Tape<T>::backward(int loss_id) {
  if (value(loss_id).size() != 1)
    throw UsageError("backward requires a scalar loss, got shape " +
                     shape_str(value(loss_id).shape));
  accumulate(loss_id, TensorT<T>::scalar(T(1)));
  for (int u = loss_id; u >= 0; --u) {
    Node& n = nodes_[u];
    if (n.backprop && has_grad(u)) n.backprop(*this);
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace sspb
