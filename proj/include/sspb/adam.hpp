#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "sspb/tensor.hpp"

namespace sspb {

template <typename T>
using ParamSetT = std::map<std::string, TensorT<T>>;
using ParamSet = ParamSetT<float>;

struct AdamParams {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
};

// Per-parameter first/second moment estimates plus the shared step counter.
template <typename T>
struct AdamStateT {
  AdamParams hp;
  int64_t t = 0;
  ParamSetT<T> m;
  ParamSetT<T> v;
};
using AdamState = AdamStateT<float>;

// One bias-corrected Adam update over every parameter. Parameters missing
// from `grads` are treated as zero-gradient. Increments state.t by exactly 1.
template <typename T>
void adam_step(ParamSetT<T>& params, const ParamSetT<T>& grads, AdamStateT<T>& state);

extern template void adam_step<float>(ParamSetT<float>&, const ParamSetT<float>&,
                                      AdamStateT<float>&);
extern template void adam_step<double>(ParamSetT<double>&, const ParamSetT<double>&,
                                       AdamStateT<double>&);

}  // namespace sspb
