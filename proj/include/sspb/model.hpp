#pragma once

#include <map>
#include <string>
#include <vector>

#include "sspb/adam.hpp"
#include "sspb/autodiff.hpp"
#include "sspb/layers.hpp"

namespace sspb {

enum class LayerKind {
  kConv2d,
  kDense,
  kRelu,
  kGlobalAvgPool,
  kUpsampleNearest,
  kDropout,
  kLogistic,
  kScale,  // fixed elementwise multiply, no parameters
};

// One layer of a sequential stack. Parameterized layers (conv, dense) carry
// a unique name; their slots are "<name>/weight" and "<name>/bias".
struct LayerOp {
  LayerKind kind;
  std::string name;

  int kernel_h = 0, kernel_w = 0, in_ch = 0, out_ch = 0, stride = 1;
  Padding padding = Padding::kSame;
  int in_dim = 0, out_dim = 0;
  int factor = 1;
  double rate = 0.0;
  double scale_factor = 1.0;

  static LayerOp conv(std::string name, int kh, int kw, int cin, int cout, int stride,
                      Padding padding);
  static LayerOp dense(std::string name, int in_dim, int out_dim);
  static LayerOp relu();
  static LayerOp global_avg_pool();
  static LayerOp upsample(int factor);
  static LayerOp dropout(double rate);
  static LayerOp logistic();
  static LayerOp scale(double factor);

  bool has_params() const { return kind == LayerKind::kConv2d || kind == LayerKind::kDense; }
  std::string weight_name() const { return name + "/weight"; }
  std::string bias_name() const { return name + "/bias"; }
};

// Ordered layer stack with statically composed shapes. finalize() walks the
// stack once, validating that consecutive shapes compose and that parameter
// slot names are unique; it fills output_shape.
struct ModelSpec {
  std::vector<LayerOp> layers;
  Shape input_shape;
  Shape output_shape;
};

Shape layer_output_shape(const LayerOp& op, const Shape& in);
void finalize_spec(ModelSpec& spec);

// Staged convolutional encoder. A fixed 2/255 input scaling brings
// zero-centered pixels to unit range (the pretrained-backbone substitute has
// no batch norm, so without this the first layers see ~1e2-scale activations
// and Adam at lr 0.01 saturates every sigmoid within an epoch). Stage k is
// then conv 3x3 (same) -> ReLU -> stride-2 downsample conv, with
// base_channels * 2^k filters (capped). Parameter slots live under the
// "encoder/" prefix so downstream models can transfer them.
struct EncoderConfig {
  int input_side = 64;
  int n_stages = 3;
  int base_channels = 16;
  int channel_cap = 256;
};

ModelSpec build_encoder(const EncoderConfig& cfg);

// Pool -> dense 1024 + ReLU -> dropout 0.5 -> dense 1, linear scalar output.
ModelSpec build_rotation_head(const Shape& encoder_out);

// n_blocks of (conv 3x3 same, ReLU, upsample x2) with channel counts
// top_channels / 2^b, then a linear conv down to 3 channels. top_channels
// must be a power of two >= 2^n_blocks.
ModelSpec build_deconv_decoder(const Shape& encoder_out, int n_blocks, int top_channels);

// Pool -> dense 1 -> logistic; scalar output in (0, 1).
ModelSpec build_classifier_head(const Shape& encoder_out);

// Concatenates two finalized specs; b's input shape must equal a's output.
ModelSpec chain(const ModelSpec& a, const ModelSpec& b);

// Glorot-uniform weights, zero biases. Each parameter tensor draws from an
// independent stream derived from (seed, slot name), so values depend only
// on the name, not the build order.
ParamSet init_params(const ModelSpec& spec, uint64_t seed);

std::vector<std::string> param_names(const ModelSpec& spec);
std::vector<std::string> encoder_param_names(const ModelSpec& spec);

// Fresh ParamSet for `dst` seeded by `seed`, with every "encoder/" slot
// overwritten by a bit-exact copy from `src`. Missing or shape-mismatched
// slots raise TransferError listing the offending names.
ParamSet transfer_encoder_weights(const ParamSet& src, const ModelSpec& dst, uint64_t seed);

// Appends the spec's forward pass to a tape. `params` maps slot name to a
// tape leaf. dropout_rng is only consulted when training and the spec has a
// dropout layer.
template <typename T>
int build_forward(Tape<T>& tape, const ModelSpec& spec,
                  const std::map<std::string, int>& params, int input, bool training,
                  Rng* dropout_rng);

// Convenience single-example inference (no dropout, no gradients).
Tensor forward_eval(const ModelSpec& spec, const ParamSet& params, const Tensor& input);

extern template int build_forward<float>(Tape<float>&, const ModelSpec&,
                                         const std::map<std::string, int>&, int, bool, Rng*);
extern template int build_forward<double>(Tape<double>&, const ModelSpec&,
                                          const std::map<std::string, int>&, int, bool, Rng*);

}  // namespace sspb
