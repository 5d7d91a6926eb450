#include "sspb/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "sspb/error.hpp"

namespace sspb {

LayerOp LayerOp::conv(std::string name, int kh, int kw, int cin, int cout, int stride,
                      Padding padding) {
  if (kh < 1 || kw < 1) throw ParamError("conv kernel extents must be >= 1");
  if (stride < 1) throw ParamError("conv stride must be >= 1");
  LayerOp op;
  op.kind = LayerKind::kConv2d;
  op.name = std::move(name);
  op.kernel_h = kh;
  op.kernel_w = kw;
  op.in_ch = cin;
  op.out_ch = cout;
  op.stride = stride;
  op.padding = padding;
  return op;
}

LayerOp LayerOp::dense(std::string name, int in_dim, int out_dim) {
  LayerOp op;
  op.kind = LayerKind::kDense;
  op.name = std::move(name);
  op.in_dim = in_dim;
  op.out_dim = out_dim;
  return op;
}

LayerOp LayerOp::relu() {
  LayerOp op;
  op.kind = LayerKind::kRelu;
  return op;
}

LayerOp LayerOp::global_avg_pool() {
  LayerOp op;
  op.kind = LayerKind::kGlobalAvgPool;
  return op;
}

LayerOp LayerOp::upsample(int factor) {
  if (factor < 1) throw ParamError("upsample factor must be >= 1");
  LayerOp op;
  op.kind = LayerKind::kUpsampleNearest;
  op.factor = factor;
  return op;
}

LayerOp LayerOp::dropout(double rate) {
  if (rate < 0.0 || rate >= 1.0) throw ParamError("dropout rate must be in [0, 1)");
  LayerOp op;
  op.kind = LayerKind::kDropout;
  op.rate = rate;
  return op;
}

LayerOp LayerOp::logistic() {
  LayerOp op;
  op.kind = LayerKind::kLogistic;
  return op;
}

LayerOp LayerOp::scale(double factor) {
  LayerOp op;
  op.kind = LayerKind::kScale;
  op.scale_factor = factor;
  return op;
}

Shape layer_output_shape(const LayerOp& op, const Shape& in) {
  switch (op.kind) {
    case LayerKind::kConv2d: {
      if (in.size() != 3)
        throw ShapeError("conv layer '" + op.name + "' needs H x W x C input, got " +
                         shape_str(in));
      if (in[2] != static_cast<std::size_t>(op.in_ch))
        throw ShapeError("conv layer '" + op.name + "' expects " + std::to_string(op.in_ch) +
                         " channels, got " + shape_str(in));
      std::size_t oh, ow;
      if (op.padding == Padding::kSame) {
        oh = (in[0] + op.stride - 1) / op.stride;
        ow = (in[1] + op.stride - 1) / op.stride;
      } else {
        if (in[0] < static_cast<std::size_t>(op.kernel_h) ||
            in[1] < static_cast<std::size_t>(op.kernel_w))
          throw ShapeError("conv layer '" + op.name + "' valid padding needs input >= kernel");
        oh = (in[0] - op.kernel_h) / op.stride + 1;
        ow = (in[1] - op.kernel_w) / op.stride + 1;
      }
      return {oh, ow, static_cast<std::size_t>(op.out_ch)};
    }
    case LayerKind::kDense:
      if (in.size() != 1 || in[0] != static_cast<std::size_t>(op.in_dim))
        throw ShapeError("dense layer '" + op.name + "' expects a vector of length " +
                         std::to_string(op.in_dim) + ", got " + shape_str(in));
      return {static_cast<std::size_t>(op.out_dim)};
    case LayerKind::kRelu:
    case LayerKind::kDropout:
    case LayerKind::kLogistic:
    case LayerKind::kScale:
      return in;
    case LayerKind::kGlobalAvgPool:
      if (in.size() != 3)
        throw ShapeError("global_avg_pool needs H x W x C input, got " + shape_str(in));
      return {in[2]};
    case LayerKind::kUpsampleNearest:
      if (in.size() != 3)
        throw ShapeError("upsample needs H x W x C input, got " + shape_str(in));
      return {in[0] * op.factor, in[1] * op.factor, in[2]};
  }
  throw ShapeError("unknown layer kind");
}

void finalize_spec(ModelSpec& spec) {
  if (spec.input_shape.empty()) throw ConfigError("model spec needs an input shape");
  std::set<std::string> names;
  Shape cur = spec.input_shape;
  for (const LayerOp& op : spec.layers) {
    if (op.has_params() && !names.insert(op.name).second)
      throw ConfigError("duplicate parameter slot name '" + op.name + "'");
    cur = layer_output_shape(op, cur);
  }
  spec.output_shape = cur;
}

ModelSpec build_encoder(const EncoderConfig& cfg) {
  if (cfg.n_stages < 1) throw ConfigError("encoder needs at least one stage");
  if (cfg.base_channels < 1) throw ConfigError("encoder base_channels must be >= 1");
  const int div = 1 << cfg.n_stages;
  if (cfg.input_side % div != 0)
    throw ConfigError("encoder input side " + std::to_string(cfg.input_side) +
                      " not divisible by 2^" + std::to_string(cfg.n_stages));

  ModelSpec spec;
  spec.input_shape = {static_cast<std::size_t>(cfg.input_side),
                      static_cast<std::size_t>(cfg.input_side), 3};
  spec.layers.push_back(LayerOp::scale(2.0 / 255.0));
  int in_ch = 3;
  for (int s = 0; s < cfg.n_stages; ++s) {
    const int ch = std::min(cfg.base_channels << s, cfg.channel_cap);
    const std::string stage = "encoder/stage" + std::to_string(s);
    spec.layers.push_back(LayerOp::conv(stage + "_conv", 3, 3, in_ch, ch, 1, Padding::kSame));
    spec.layers.push_back(LayerOp::relu());
    // restore the variance the ReLU dropped; with Glorot weights the stage
    // is then magnitude-preserving, so deep stacks neither collapse nor blow
    // up before training has shaped them
    spec.layers.push_back(LayerOp::scale(std::numbers::sqrt2));
    spec.layers.push_back(LayerOp::conv(stage + "_down", 3, 3, ch, ch, 2, Padding::kSame));
    in_ch = ch;
  }
  finalize_spec(spec);
  return spec;
}

ModelSpec build_rotation_head(const Shape& encoder_out) {
  if (encoder_out.size() != 3)
    throw ShapeError("rotation head expects H x W x C encoder output");
  const int c = static_cast<int>(encoder_out[2]);
  ModelSpec spec;
  spec.input_shape = encoder_out;
  spec.layers.push_back(LayerOp::global_avg_pool());
  spec.layers.push_back(LayerOp::dense("head/dense0", c, 1024));
  spec.layers.push_back(LayerOp::relu());
  spec.layers.push_back(LayerOp::dropout(0.5));
  spec.layers.push_back(LayerOp::dense("head/dense1", 1024, 1));
  finalize_spec(spec);
  return spec;
}

ModelSpec build_deconv_decoder(const Shape& encoder_out, int n_blocks, int top_channels) {
  if (encoder_out.size() != 3)
    throw ShapeError("decoder expects H x W x C encoder output");
  if (n_blocks < 1) throw ConfigError("decoder needs at least one block");
  if (top_channels < (1 << n_blocks) || (top_channels & (top_channels - 1)) != 0)
    throw ConfigError("decoder top_channels must be a power of two >= 2^n_blocks, got " +
                      std::to_string(top_channels));

  ModelSpec spec;
  spec.input_shape = encoder_out;
  int in_ch = static_cast<int>(encoder_out[2]);
  for (int b = 0; b < n_blocks; ++b) {
    const int ch = top_channels >> b;
    const std::string block = "head/block" + std::to_string(b);
    spec.layers.push_back(LayerOp::conv(block + "_conv", 3, 3, in_ch, ch, 1, Padding::kSame));
    spec.layers.push_back(LayerOp::relu());
    spec.layers.push_back(LayerOp::scale(std::numbers::sqrt2));
    spec.layers.push_back(LayerOp::upsample(2));
    in_ch = ch;
  }
  spec.layers.push_back(LayerOp::conv("head/output_conv", 3, 3, in_ch, 3, 1, Padding::kSame));
  // undo the encoder's input scaling so reconstructions reach the
  // zero-centered pixel range while the conv weights stay near unit scale
  spec.layers.push_back(LayerOp::scale(255.0 / 2.0));
  finalize_spec(spec);
  return spec;
}

ModelSpec build_classifier_head(const Shape& encoder_out) {
  if (encoder_out.size() != 3)
    throw ShapeError("classifier head expects H x W x C encoder output");
  const int c = static_cast<int>(encoder_out[2]);
  ModelSpec spec;
  spec.input_shape = encoder_out;
  spec.layers.push_back(LayerOp::global_avg_pool());
  spec.layers.push_back(LayerOp::dense("head/dense0", c, 1));
  spec.layers.push_back(LayerOp::logistic());
  finalize_spec(spec);
  return spec;
}

ModelSpec chain(const ModelSpec& a, const ModelSpec& b) {
  if (a.output_shape != b.input_shape)
    throw ShapeError("cannot chain specs: " + shape_str(a.output_shape) + " feeds " +
                     shape_str(b.input_shape));
  ModelSpec spec;
  spec.input_shape = a.input_shape;
  spec.layers = a.layers;
  spec.layers.insert(spec.layers.end(), b.layers.begin(), b.layers.end());
  finalize_spec(spec);
  return spec;
}

namespace {

Tensor glorot_uniform(const Shape& shape, double fan_in, double fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  Tensor t(shape);
  for (float& v : t.data) v = static_cast<float>(rng.uniform(-limit, limit));
  return t;
}

uint64_t name_hash(const std::string& name) { return fnv1a64(name.data(), name.size()); }

}  // namespace

ParamSet init_params(const ModelSpec& spec, uint64_t seed) {
  ParamSet params;
  for (const LayerOp& op : spec.layers) {
    if (!op.has_params()) continue;
    Rng rng(derive_seed(seed, name_hash(op.weight_name())));
    if (op.kind == LayerKind::kConv2d) {
      const Shape kshape{static_cast<std::size_t>(op.kernel_h),
                         static_cast<std::size_t>(op.kernel_w),
                         static_cast<std::size_t>(op.in_ch),
                         static_cast<std::size_t>(op.out_ch)};
      const double fan_in = static_cast<double>(op.kernel_h) * op.kernel_w * op.in_ch;
      const double fan_out = static_cast<double>(op.kernel_h) * op.kernel_w * op.out_ch;
      params[op.weight_name()] = glorot_uniform(kshape, fan_in, fan_out, rng);
      params[op.bias_name()] = Tensor({static_cast<std::size_t>(op.out_ch)});
    } else {
      const Shape wshape{static_cast<std::size_t>(op.in_dim),
                         static_cast<std::size_t>(op.out_dim)};
      params[op.weight_name()] = glorot_uniform(wshape, op.in_dim, op.out_dim, rng);
      params[op.bias_name()] = Tensor({static_cast<std::size_t>(op.out_dim)});
    }
  }
  return params;
}

std::vector<std::string> param_names(const ModelSpec& spec) {
  std::vector<std::string> names;
  for (const LayerOp& op : spec.layers) {
    if (!op.has_params()) continue;
    names.push_back(op.weight_name());
    names.push_back(op.bias_name());
  }
  return names;
}

std::vector<std::string> encoder_param_names(const ModelSpec& spec) {
  std::vector<std::string> names;
  for (const std::string& n : param_names(spec))
    if (n.rfind("encoder/", 0) == 0) names.push_back(n);
  return names;
}

ParamSet transfer_encoder_weights(const ParamSet& src, const ModelSpec& dst, uint64_t seed) {
  ParamSet params = init_params(dst, seed);
  std::string problems;
  for (const std::string& name : encoder_param_names(dst)) {
    auto it = src.find(name);
    if (it == src.end()) {
      problems += (problems.empty() ? "" : ", ") + ("missing " + name);
      continue;
    }
    if (!it->second.same_shape(params.at(name))) {
      problems += (problems.empty() ? "" : ", ") +
                  ("shape mismatch " + name + " " + shape_str(it->second.shape) + " vs " +
                   shape_str(params.at(name).shape));
      continue;
    }
    params[name] = it->second;
  }
  if (!problems.empty()) throw TransferError("encoder weight transfer failed: " + problems);
  return params;
}

template <typename T>
int build_forward(Tape<T>& tape, const ModelSpec& spec,
                  const std::map<std::string, int>& params, int input, bool training,
                  Rng* dropout_rng) {
  int cur = input;
  for (const LayerOp& op : spec.layers) {
    switch (op.kind) {
      case LayerKind::kConv2d:
        cur = tape.conv2d(cur, params.at(op.weight_name()), params.at(op.bias_name()),
                          op.stride, op.padding);
        break;
      case LayerKind::kDense:
        cur = tape.dense(cur, params.at(op.weight_name()), params.at(op.bias_name()));
        break;
      case LayerKind::kRelu:
        cur = tape.relu(cur);
        break;
      case LayerKind::kGlobalAvgPool:
        cur = tape.global_avg_pool(cur);
        break;
      case LayerKind::kUpsampleNearest:
        cur = tape.upsample_nearest(cur, op.factor);
        break;
      case LayerKind::kDropout: {
        if (training && !dropout_rng)
          throw UsageError("training forward pass through dropout needs an RNG");
        static Rng unused(0);
        cur = tape.dropout(cur, op.rate, training, training ? *dropout_rng : unused);
        break;
      }
      case LayerKind::kLogistic:
        cur = tape.logistic(cur);
        break;
      case LayerKind::kScale:
        cur = tape.scale(cur, static_cast<T>(op.scale_factor));
        break;
    }
  }
  return cur;
}

Tensor forward_eval(const ModelSpec& spec, const ParamSet& params, const Tensor& input) {
  if (input.shape != spec.input_shape)
    throw ShapeError("input shape " + shape_str(input.shape) + " does not match model input " +
                     shape_str(spec.input_shape));
  Tape<float> tape;
  std::map<std::string, int> nodes;
  for (const std::string& name : param_names(spec))
    nodes[name] = tape.leaf(params.at(name), false);
  const int in = tape.leaf(input, false);
  const int out = build_forward(tape, spec, nodes, in, false, nullptr);
  return tape.value(out);
}

template int build_forward<float>(Tape<float>&, const ModelSpec&,
                                  const std::map<std::string, int>&, int, bool, Rng*);
template int build_forward<double>(Tape<double>&, const ModelSpec&,
                                   const std::map<std::string, int>&, int, bool, Rng*);

}  // namespace sspb
