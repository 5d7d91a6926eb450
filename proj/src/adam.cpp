#include "sspb/adam.hpp"

#include <cmath>

#include "sspb/error.hpp"

namespace sspb {

template <typename T>
void adam_step(ParamSetT<T>& params, const ParamSetT<T>& grads, AdamStateT<T>& state) {
  state.t += 1;
  const double b1 = state.hp.beta1;
  const double b2 = state.hp.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.t));

  for (auto& [name, p] : params) {
    auto& m = state.m.try_emplace(name, TensorT<T>(p.shape)).first->second;
    auto& v = state.v.try_emplace(name, TensorT<T>(p.shape)).first->second;
    if (!m.same_shape(p) || !v.same_shape(p))
      throw ShapeError("adam moment shape does not match parameter '" + name + "'");

    const TensorT<T>* g = nullptr;
    if (auto it = grads.find(name); it != grads.end()) {
      if (!it->second.same_shape(p))
        throw ShapeError("adam gradient shape " + shape_str(it->second.shape) +
                         " does not match parameter '" + name + "' " + shape_str(p.shape));
      g = &it->second;
    }

    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g ? static_cast<double>(g->data[i]) : 0.0;
      const double mi = b1 * static_cast<double>(m.data[i]) + (1.0 - b1) * gi;
      const double vi = b2 * static_cast<double>(v.data[i]) + (1.0 - b2) * gi * gi;
      m.data[i] = static_cast<T>(mi);
      v.data[i] = static_cast<T>(vi);
      const double update = state.hp.lr * (mi / bc1) / (std::sqrt(vi / bc2) + state.hp.epsilon);
      p.data[i] = static_cast<T>(static_cast<double>(p.data[i]) - update);
    }
  }
}

template void adam_step<float>(ParamSetT<float>&, const ParamSetT<float>&,
                               AdamStateT<float>&);
template void adam_step<double>(ParamSetT<double>&, const ParamSetT<double>&,
                                AdamStateT<double>&);

}  // namespace sspb
