#pragma once

#include <functional>
#include <vector>

#include "sspb/layers.hpp"
#include "sspb/tensor.hpp"

namespace sspb {

// Wengert-list reverse-mode tape over whole tensors. Nodes are appended in
// evaluation order, so reverse creation order is a valid topological order
// for the backward sweep. Gradients are accumulated lazily: a node that is
// not on any path to the loss never allocates a gradient and reads back as
// zero.
template <typename T>
class Tape {
 public:
  // Registers an input tensor. Parameters pass requires_grad = true; plain
  // data (inputs, targets) defaults to false so the backward sweep skips
  // their gradient work.
  int leaf(TensorT<T> value, bool requires_grad = false);

  int conv2d(int input, int kernels, int bias, int stride, Padding padding);
  int dense(int input, int weights, int bias);
  int relu(int input);
  int global_avg_pool(int input);
  int upsample_nearest(int input, int factor);
  int dropout(int input, double rate, bool training, Rng& rng);
  int logistic(int input);
  int mse(int pred, int target);
  int bce(int pred, int target);

  // Scalar-only helpers used to average per-example losses into a batch loss.
  int sum_scalars(const std::vector<int>& ids);
  int scale(int input, T factor);

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse. The loss node
  // must hold exactly one element.
  void backward(int loss_id);

  const TensorT<T>& value(int id) const { return nodes_[id].value; }

  // Gradient of the last backward() target with respect to node `id`;
  // lazily materialized zeros if the node was never reached.
  const TensorT<T>& grad(int id);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    TensorT<T> value;
    TensorT<T> grad;  // empty until first accumulation
    bool requires_grad = false;
    std::function<void(Tape&)> backprop;  // null for leaves
  };

  std::vector<Node> nodes_;

  int push(TensorT<T> value, bool requires_grad, std::function<void(Tape&)> backprop);
  void accumulate(int id, const TensorT<T>& g);
  bool wants_grad(int id) const { return nodes_[id].requires_grad; }
  bool has_grad(int id) const { return !nodes_[id].grad.data.empty(); }
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace sspb
