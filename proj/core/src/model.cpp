#include "dtpnet/model.hpp"

#include <array>
#include <cmath>

#include <json.hpp>

#include "dtpnet/rng.hpp"

namespace dtp {

using nlohmann::json;

int DTPNetConfig::stride() const {
  if (stride_override > 0) return stride_override;
  return encoder_kernel % 2 == 0 ? encoder_kernel / 2
                                 : (encoder_kernel - 1) / 2;
}

int DTPNetConfig::growth() const {
  return growth_channels > 0 ? growth_channels : (conv_channels + 1) / 2;
}

int DTPNetConfig::dilation_of(int block) const {
  if (dilation_mode == DilationMode::Flat) return 1;
  return 1 << (block % blocks_per_pyramid);
}

int DTPNetConfig::block_input_channels(int block) const {
  switch (connectivity) {
    case Connectivity::Dense:
      if (dense_scope == DenseScope::PerPyramid)
        return encoder_filters + (block % blocks_per_pyramid) * growth();
      return encoder_filters + block * growth();
    case Connectivity::Residual:
      return encoder_filters;
    case Connectivity::None:
      return block == 0 ? encoder_filters : growth();
  }
  return 0;
}

int DTPNetConfig::block_output_channels() const {
  // residual wiring needs y_{i-1} + block(y_{i-1}) to type-check
  return connectivity == Connectivity::Residual ? encoder_filters : growth();
}

int DTPNetConfig::merge_input_channels() const {
  switch (connectivity) {
    case Connectivity::Dense:
      return encoder_filters + num_blocks() * growth();
    case Connectivity::Residual:
      return encoder_filters;
    case Connectivity::None:
      return growth();
  }
  return 0;
}

void DTPNetConfig::validate() const {
  if (encoder_filters < 1)
    throw ConfigError("config: N = " + std::to_string(encoder_filters));
  if (encoder_kernel < 2)
    throw ConfigError("config: L = " + std::to_string(encoder_kernel) +
                      ", must be >= 2");
  if (encoder_kernel % 2 != 0 && stride_override == 0)
    throw ConfigError("config: L = " + std::to_string(encoder_kernel) +
                      " is odd; set stride explicitly (suggested (L-1)/2)");
  if (conv_channels < 1)
    throw ConfigError("config: H = " + std::to_string(conv_channels));
  if (conv_kernel < 1)
    throw ConfigError("config: P = " + std::to_string(conv_kernel));
  if (blocks_per_pyramid < 1)
    throw ConfigError("config: M = " + std::to_string(blocks_per_pyramid));
  if (pyramid_repeats < 1)
    throw ConfigError("config: R = " + std::to_string(pyramid_repeats));
  if (growth() < 1 || growth() > conv_channels)
    throw ConfigError("config: B = " + std::to_string(growth()) +
                      " must be in [1, H = " + std::to_string(conv_channels) +
                      "]");
  if (stride() < 1 || stride() > encoder_kernel)
    throw ConfigError("config: stride " + std::to_string(stride()) +
                      " must be in [1, L]");
  if (activation != "relu")
    throw ConfigError("config: activation '" + activation +
                      "' (only relu is supported)");
}

namespace {

Connectivity connectivity_from_name(const std::string& name) {
  if (name == "dense") return Connectivity::Dense;
  if (name == "residual") return Connectivity::Residual;
  if (name == "none") return Connectivity::None;
  throw ConfigError("config: connectivity '" + name +
                    "', want dense|residual|none");
}

const char* connectivity_name(Connectivity c) {
  switch (c) {
    case Connectivity::Dense: return "dense";
    case Connectivity::Residual: return "residual";
    case Connectivity::None: return "none";
  }
  return "?";
}

DilationMode dilation_mode_from_name(const std::string& name) {
  if (name == "pyramid") return DilationMode::Pyramid;
  if (name == "flat") return DilationMode::Flat;
  throw ConfigError("config: dilation_mode '" + name + "', want pyramid|flat");
}

DenseScope dense_scope_from_name(const std::string& name) {
  if (name == "global") return DenseScope::Global;
  if (name == "pyramid") return DenseScope::PerPyramid;
  throw ConfigError("config: dense_scope '" + name + "', want global|pyramid");
}

}  // namespace

DTPNetConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: not a JSON object");

  static const char* known[] = {"N", "L", "H", "P", "M", "R", "B",
                                "connectivity", "dilation_mode", "activation",
                                "stride", "dense_scope"};
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError("config: unknown field '" + key + "'");
  }

  auto get_int = [&](const char* key, int fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number_integer())
      throw ConfigError(std::string("config: field '") + key +
                        "' must be an integer");
    return j[key].get<int>();
  };
  auto get_str = [&](const char* key, const char* fallback) {
    if (!j.contains(key)) return std::string(fallback);
    if (!j[key].is_string())
      throw ConfigError(std::string("config: field '") + key +
                        "' must be a string");
    return j[key].get<std::string>();
  };

  DTPNetConfig c;
  c.encoder_filters = get_int("N", c.encoder_filters);
  c.encoder_kernel = get_int("L", c.encoder_kernel);
  c.conv_channels = get_int("H", c.conv_channels);
  c.conv_kernel = get_int("P", c.conv_kernel);
  c.blocks_per_pyramid = get_int("M", c.blocks_per_pyramid);
  c.pyramid_repeats = get_int("R", c.pyramid_repeats);
  c.growth_channels = get_int("B", 0);
  c.connectivity = connectivity_from_name(get_str("connectivity", "dense"));
  c.dilation_mode = dilation_mode_from_name(get_str("dilation_mode", "pyramid"));
  c.activation = get_str("activation", "relu");
  c.stride_override = get_int("stride", 0);
  c.dense_scope = dense_scope_from_name(get_str("dense_scope", "global"));
  c.validate();
  return c;
}

std::string config_to_json(const DTPNetConfig& c) {
  json j;
  j["N"] = c.encoder_filters;
  j["L"] = c.encoder_kernel;
  j["H"] = c.conv_channels;
  j["P"] = c.conv_kernel;
  j["M"] = c.blocks_per_pyramid;
  j["R"] = c.pyramid_repeats;
  j["B"] = c.growth();
  j["connectivity"] = connectivity_name(c.connectivity);
  j["dilation_mode"] =
      c.dilation_mode == DilationMode::Pyramid ? "pyramid" : "flat";
  j["activation"] = c.activation;
  if (c.stride_override > 0) j["stride"] = c.stride_override;
  if (c.dense_scope == DenseScope::PerPyramid) j["dense_scope"] = "pyramid";
  return j.dump();
}

AblationVariant variant_from_name(const std::string& name) {
  if (name == "basenet") return AblationVariant::Basenet;
  if (name == "tpb") return AblationVariant::Tpb;
  if (name == "dense") return AblationVariant::Dense;
  if (name == "tpb_dense") return AblationVariant::TpbDense;
  if (name == "tpb_res") return AblationVariant::TpbRes;
  throw ConfigError("ablation variant '" + name +
                    "', want basenet|tpb|dense|tpb_dense|tpb_res");
}

const char* variant_name(AblationVariant variant) {
  switch (variant) {
    case AblationVariant::Basenet: return "basenet";
    case AblationVariant::Tpb: return "tpb";
    case AblationVariant::Dense: return "dense";
    case AblationVariant::TpbDense: return "tpb_dense";
    case AblationVariant::TpbRes: return "tpb_res";
  }
  return "?";
}

DTPNetConfig ablation_variant(AblationVariant variant, DTPNetConfig base) {
  base.validate();
  switch (variant) {
    case AblationVariant::Basenet:
      base.connectivity = Connectivity::None;
      base.dilation_mode = DilationMode::Flat;
      break;
    case AblationVariant::Tpb:
      base.connectivity = Connectivity::None;
      base.dilation_mode = DilationMode::Pyramid;
      break;
    case AblationVariant::Dense:
      base.connectivity = Connectivity::Dense;
      base.dilation_mode = DilationMode::Flat;
      break;
    case AblationVariant::TpbDense:
      base.connectivity = Connectivity::Dense;
      base.dilation_mode = DilationMode::Pyramid;
      break;
    case AblationVariant::TpbRes:
      base.connectivity = Connectivity::Residual;
      base.dilation_mode = DilationMode::Pyramid;
      break;
  }
  return base;
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>*>> Model<T>::named_params() {
  std::vector<std::pair<std::string, Tensor<T>*>> out;
  out.emplace_back("encoder.weight", &encoder_weight);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const std::string prefix = "separator.block" + std::to_string(i);
    out.emplace_back(prefix + ".bottleneck.weight", &blocks[i].bottleneck);
    out.emplace_back(prefix + ".dilated.weight", &blocks[i].dilated);
    out.emplace_back(prefix + ".out.weight", &blocks[i].out);
  }
  out.emplace_back("separator.merge.weight", &merge_weight);
  out.emplace_back("decoder.weight", &decoder_weight);
  return out;
}

template <typename T>
std::vector<std::pair<std::string, const Tensor<T>*>> Model<T>::named_params()
    const {
  auto mutable_params = const_cast<Model<T>*>(this)->named_params();
  std::vector<std::pair<std::string, const Tensor<T>*>> out;
  out.reserve(mutable_params.size());
  for (auto& [name, ptr] : mutable_params) out.emplace_back(name, ptr);
  return out;
}

namespace {

template <typename T>
Tensor<T> init_weight(std::vector<int> shape, int fan_in, int fan_out,
                      Rng& rng) {
  Tensor<T> w(std::move(shape));
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  for (auto& v : w.values)
    v = static_cast<T>(rng.uniform(-bound, bound));
  return w;
}

}  // namespace

template <typename T>
Model<T> build(const DTPNetConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(splitmix64(seed));

  Model<T> m;
  m.config = config;
  const int filters = config.encoder_filters;
  const int kernel = config.encoder_kernel;

  m.encoder_weight = init_weight<T>({filters, 1, kernel}, kernel,
                                    filters * kernel, rng);

  const int growth = config.growth();
  const int hidden = config.conv_channels;
  const int taps = config.conv_kernel;
  const int out_ch = config.block_output_channels();
  m.blocks.resize(static_cast<std::size_t>(config.num_blocks()));
  for (int b = 0; b < config.num_blocks(); ++b) {
    auto& block = m.blocks[static_cast<std::size_t>(b)];
    const int c_in = config.block_input_channels(b);
    block.dilation = config.dilation_of(b);
    block.bottleneck =
        init_weight<T>({growth, c_in, 1}, c_in, growth, rng);
    block.dilated =
        init_weight<T>({hidden, growth, taps}, growth * taps, hidden * taps, rng);
    block.out = init_weight<T>({out_ch, hidden, 1}, hidden, out_ch, rng);
  }

  const int merge_in = config.merge_input_channels();
  m.merge_weight =
      init_weight<T>({filters, merge_in, 1}, merge_in, filters, rng);
  m.decoder_weight = init_weight<T>({filters, 1, kernel}, filters * kernel,
                                    kernel, rng);
  return m;
}

namespace {

// pad so the dilated conv preserves the frame count
ConvSpec block_conv_spec(int c_in, int c_out, int kernel, int dilation) {
  ConvSpec spec;
  spec.in_channels = c_in;
  spec.out_channels = c_out;
  spec.kernel = kernel;
  spec.stride = 1;
  spec.dilation = dilation;
  const int span = dilation * (kernel - 1);
  spec.pad_left = span / 2;
  spec.pad_right = span - span / 2;
  return spec;
}

template <typename T>
void check_encode_input(const DTPNetConfig& config, const Tensor<T>& x) {
  if (x.rank() != 2 || x.dim(0) != 1)
    throw ShapeError("encode: input shape " + x.shape_str() +
                     ", want [1 x T]");
  const int t = x.dim(1);
  const int kernel = config.encoder_kernel;
  if (t < kernel)
    throw ShapeError("encode: T = " + std::to_string(t) + " < L = " +
                     std::to_string(kernel));
  if ((t - kernel) % config.stride() != 0)
    throw ShapeError("encode: T = " + std::to_string(t) +
                     " not aligned to stride " + std::to_string(config.stride()) +
                     "; use denoise_any_length");
}

struct SeparatorTaps {
  std::vector<int> block_inputs;
  std::vector<int> block_outputs;
  int separated = -1;
};

// Emits the separator sub-graph on the tape. block_weights holds the
// (bottleneck, dilated, out) leaf id triple per block.
template <typename T>
SeparatorTaps emit_separator(Tape<T>& tape, const DTPNetConfig& config,
                             const std::vector<std::array<int, 3>>& block_weights,
                             const std::vector<int>& dilations,
                             int merge_weight, int z) {
  SeparatorTaps taps;
  std::vector<int> features = {z};  // dense feature pool
  int cascade = z;                  // residual / plain cascade state

  for (int b = 0; b < config.num_blocks(); ++b) {
    int h;
    if (config.connectivity == Connectivity::Dense) {
      if (config.dense_scope == DenseScope::PerPyramid &&
          b % config.blocks_per_pyramid == 0) {
        features.assign(1, z);
      }
      h = features.size() == 1 ? features[0] : tape.concat_channels(features);
    } else {
      h = cascade;
    }
    taps.block_inputs.push_back(h);

    const auto& w = block_weights[static_cast<std::size_t>(b)];
    int y = tape.conv1d(
        h, w[0], block_conv_spec(config.block_input_channels(b),
                                 config.growth(), 1, 1));
    y = tape.relu(y);
    y = tape.conv1d(y, w[1],
                    block_conv_spec(config.growth(), config.conv_channels,
                                    config.conv_kernel,
                                    dilations[static_cast<std::size_t>(b)]));
    y = tape.relu(y);
    y = tape.conv1d(
        y, w[2],
        block_conv_spec(config.conv_channels, config.block_output_channels(),
                        1, 1));
    taps.block_outputs.push_back(y);

    switch (config.connectivity) {
      case Connectivity::Dense:
        features.push_back(y);
        break;
      case Connectivity::Residual:
        cascade = tape.add(cascade, y);
        break;
      case Connectivity::None:
        cascade = y;
        break;
    }
  }

  int merge_in;
  if (config.connectivity == Connectivity::Dense) {
    std::vector<int> all = {z};
    for (int id : taps.block_outputs) all.push_back(id);
    merge_in = tape.concat_channels(all);
  } else {
    merge_in = cascade;
  }
  taps.separated = tape.conv1d(
      merge_in, merge_weight,
      block_conv_spec(config.merge_input_channels(), config.encoder_filters,
                      1, 1));
  return taps;
}

}  // namespace

template <typename T>
ForwardGraph build_forward_from_leaves(Tape<T>& tape,
                                       const DTPNetConfig& config,
                                       const std::vector<int>& weight_leaves,
                                       int input_leaf) {
  const std::size_t expected =
      static_cast<std::size_t>(3 * config.num_blocks()) + 3;
  if (weight_leaves.size() != expected)
    throw ShapeError("build_forward: " + std::to_string(weight_leaves.size()) +
                     " weight leaves, want " + std::to_string(expected));
  check_encode_input(config, tape.value(input_leaf));

  ForwardGraph g;
  g.input = input_leaf;
  g.weights = weight_leaves;

  // named_params order: encoder, blocks (bottleneck, dilated, out), merge,
  // decoder
  std::size_t next = 0;
  const int encoder_w = weight_leaves[next++];
  std::vector<std::array<int, 3>> block_weights;
  std::vector<int> dilations;
  for (int b = 0; b < config.num_blocks(); ++b) {
    const int w0 = weight_leaves[next++];
    const int w1 = weight_leaves[next++];
    const int w2 = weight_leaves[next++];
    block_weights.push_back({w0, w1, w2});
    dilations.push_back(config.dilation_of(b));
  }
  const int merge_w = weight_leaves[next++];
  const int decoder_w = weight_leaves[next++];

  ConvSpec encoder_spec;
  encoder_spec.in_channels = 1;
  encoder_spec.out_channels = config.encoder_filters;
  encoder_spec.kernel = config.encoder_kernel;
  encoder_spec.stride = config.stride();
  const int z = tape.conv1d(g.input, encoder_w, encoder_spec);
  g.encoded = z;

  const SeparatorTaps taps =
      emit_separator(tape, config, block_weights, dilations, merge_w, z);
  g.block_inputs = taps.block_inputs;
  g.block_outputs = taps.block_outputs;
  g.separated = taps.separated;

  const int summed = tape.add(z, taps.separated);
  g.output = tape.conv_transpose1d(summed, decoder_w, config.stride());
  return g;
}

template <typename T>
ForwardGraph build_forward(Tape<T>& tape, const Model<T>& model,
                           const Tensor<T>& x, bool weights_require_grad) {
  check_encode_input(model.config, x);
  const int input_leaf = tape.leaf(x, false);
  std::vector<int> weight_leaves;
  for (const auto& [name, w] : model.named_params())
    weight_leaves.push_back(tape.leaf(*w, weights_require_grad));
  return build_forward_from_leaves(tape, model.config, weight_leaves,
                                   input_leaf);
}

template <typename T>
Tensor<T> encode(const Model<T>& model, const Tensor<T>& x) {
  check_encode_input(model.config, x);
  ConvSpec spec;
  spec.in_channels = 1;
  spec.out_channels = model.config.encoder_filters;
  spec.kernel = model.config.encoder_kernel;
  spec.stride = model.config.stride();
  return conv1d(x, model.encoder_weight, spec);
}

template <typename T>
SeparatorProbe<T> separate_with_taps(const Model<T>& model,
                                     const Tensor<T>& z) {
  if (z.rank() != 2 || z.dim(0) != model.config.encoder_filters)
    throw ShapeError("separate: input shape " + z.shape_str() + ", want [" +
                     std::to_string(model.config.encoder_filters) + " x K]");
  Tape<T> tape;
  const int zid = tape.leaf(z, false);
  std::vector<std::array<int, 3>> block_weights;
  std::vector<int> dilations;
  for (const auto& block : model.blocks) {
    block_weights.push_back({tape.leaf(block.bottleneck, false),
                             tape.leaf(block.dilated, false),
                             tape.leaf(block.out, false)});
    dilations.push_back(block.dilation);
  }
  const int merge_w = tape.leaf(model.merge_weight, false);
  const SeparatorTaps taps =
      emit_separator(tape, model.config, block_weights, dilations, merge_w, zid);

  SeparatorProbe<T> probe;
  for (int id : taps.block_inputs) probe.block_inputs.push_back(tape.value(id));
  for (int id : taps.block_outputs)
    probe.block_outputs.push_back(tape.value(id));
  probe.separated = tape.value(taps.separated);
  return probe;
}

template <typename T>
Tensor<T> separate(const Model<T>& model, const Tensor<T>& z) {
  return separate_with_taps(model, z).separated;
}

template <typename T>
Tensor<T> forward(const Model<T>& model, const Tensor<T>& x) {
  Tape<T> tape;
  const ForwardGraph g = build_forward(tape, model, x, false);
  return tape.value(g.output);
}

template <typename T>
Tensor<T> denoise_any_length(const Model<T>& model, const Tensor<T>& x) {
  if (x.rank() != 2 || x.dim(0) != 1)
    throw ShapeError("denoise_any_length: input shape " + x.shape_str() +
                     ", want [1 x T]");
  const int t = x.dim(1);
  const int kernel = model.config.encoder_kernel;
  const int stride = model.config.stride();
  if (t < kernel)
    throw ShapeError("denoise_any_length: T = " + std::to_string(t) +
                     " < L = " + std::to_string(kernel));

  int padded = t;
  while ((padded - kernel) % stride != 0) ++padded;
  if (padded == t) return forward(model, x);

  Tensor<T> xp({1, padded});
  std::copy(x.values.begin(), x.values.end(), xp.values.begin());
  Tensor<T> yp = forward(model, xp);
  Tensor<T> y({1, t});
  std::copy(yp.values.begin(), yp.values.begin() + t, y.values.begin());
  return y;
}

std::int64_t param_count(const DTPNetConfig& config) {
  config.validate();
  std::int64_t total = 0;
  total += static_cast<std::int64_t>(config.encoder_filters) *
           config.encoder_kernel;  // encoder
  for (int b = 0; b < config.num_blocks(); ++b) {
    const int c_in = config.block_input_channels(b);
    total += static_cast<std::int64_t>(config.growth()) * c_in;
    total += static_cast<std::int64_t>(config.conv_channels) *
             config.growth() * config.conv_kernel;
    total += static_cast<std::int64_t>(config.block_output_channels()) *
             config.conv_channels;
  }
  total += static_cast<std::int64_t>(config.encoder_filters) *
           config.merge_input_channels();  // merge
  total += static_cast<std::int64_t>(config.encoder_filters) *
           config.encoder_kernel;  // decoder
  return total;
}

std::int64_t flops_estimate(const DTPNetConfig& config, int input_length) {
  config.validate();
  const int kernel = config.encoder_kernel;
  const int stride = config.stride();
  if (input_length < kernel || (input_length - kernel) % stride != 0)
    throw ConfigError("flops_estimate: input length " +
                      std::to_string(input_length) +
                      " not aligned to the encoder stride");
  const std::int64_t frames = (input_length - kernel) / stride + 1;

  std::int64_t macs = 0;
  macs += static_cast<std::int64_t>(config.encoder_filters) * kernel * frames;
  for (int b = 0; b < config.num_blocks(); ++b) {
    const int c_in = config.block_input_channels(b);
    macs += static_cast<std::int64_t>(config.growth()) * c_in * frames;
    macs += static_cast<std::int64_t>(config.conv_channels) *
            config.growth() * config.conv_kernel * frames;
    macs += static_cast<std::int64_t>(config.block_output_channels()) *
            config.conv_channels * frames;
  }
  macs += static_cast<std::int64_t>(config.encoder_filters) *
          config.merge_input_channels() * frames;
  macs += static_cast<std::int64_t>(config.encoder_filters) * kernel * frames;
  return 2 * macs;
}

template <typename T>
FrameDualResult<T> frame_dual_reconstruction(const Tensor<T>& encoder_weight,
                                             int stride, const Tensor<T>& x) {
  if (encoder_weight.rank() != 3 || encoder_weight.dim(1) != 1)
    throw ShapeError("frame_dual: encoder weight shape " +
                     encoder_weight.shape_str() + ", want [N x 1 x L]");
  const int filters = encoder_weight.dim(0);
  const int kernel = encoder_weight.dim(2);
  if (filters < kernel)
    throw MetricDomainError("frame_dual: N = " + std::to_string(filters) +
                            " < L = " + std::to_string(kernel) +
                            ", filter bank cannot have full column rank");
  if (x.rank() != 2 || x.dim(0) != 1)
    throw ShapeError("frame_dual: input shape " + x.shape_str() +
                     ", want [1 x T]");
  const int t_len = x.dim(1);
  if (t_len < kernel || (t_len - kernel) % stride != 0)
    throw ShapeError("frame_dual: T = " + std::to_string(t_len) +
                     " not aligned to stride " + std::to_string(stride));
  const int frames = (t_len - kernel) / stride + 1;

  // gram = W^T W (L x L), rhs_k = W^T z_k, solved per frame by Cholesky
  std::vector<double> gram(static_cast<std::size_t>(kernel) * kernel, 0.0);
  for (int a = 0; a < kernel; ++a) {
    for (int b = a; b < kernel; ++b) {
      double sum = 0.0;
      for (int f = 0; f < filters; ++f) {
        sum += static_cast<double>(encoder_weight.at(f, 0, a)) *
               static_cast<double>(encoder_weight.at(f, 0, b));
      }
      gram[static_cast<std::size_t>(a) * kernel + b] = sum;
      gram[static_cast<std::size_t>(b) * kernel + a] = sum;
    }
  }

  // Cholesky with a relative pivot floor as the rank check
  std::vector<double> chol(gram);
  double max_diag = 0.0;
  for (int i = 0; i < kernel; ++i)
    max_diag = std::max(max_diag,
                        chol[static_cast<std::size_t>(i) * kernel + i]);
  const double floor = max_diag * 1e-12;
  for (int i = 0; i < kernel; ++i) {
    for (int jcol = 0; jcol <= i; ++jcol) {
      double sum = chol[static_cast<std::size_t>(i) * kernel + jcol];
      for (int k = 0; k < jcol; ++k)
        sum -= chol[static_cast<std::size_t>(i) * kernel + k] *
               chol[static_cast<std::size_t>(jcol) * kernel + k];
      if (i == jcol) {
        if (sum <= floor)
          throw MetricDomainError(
              "frame_dual: encoder filter bank is rank-deficient "
              "(pivot " + std::to_string(sum) + " at column " +
              std::to_string(i) + ")");
        chol[static_cast<std::size_t>(i) * kernel + i] = std::sqrt(sum);
      } else {
        chol[static_cast<std::size_t>(i) * kernel + jcol] =
            sum / chol[static_cast<std::size_t>(jcol) * kernel + jcol];
      }
    }
  }

  auto solve = [&](std::vector<double>& rhs) {
    // L y = rhs, L^T s = y
    for (int i = 0; i < kernel; ++i) {
      double sum = rhs[static_cast<std::size_t>(i)];
      for (int k = 0; k < i; ++k)
        sum -= chol[static_cast<std::size_t>(i) * kernel + k] *
               rhs[static_cast<std::size_t>(k)];
      rhs[static_cast<std::size_t>(i)] =
          sum / chol[static_cast<std::size_t>(i) * kernel + i];
    }
    for (int i = kernel - 1; i >= 0; --i) {
      double sum = rhs[static_cast<std::size_t>(i)];
      for (int k = i + 1; k < kernel; ++k)
        sum -= chol[static_cast<std::size_t>(k) * kernel + i] *
               rhs[static_cast<std::size_t>(k)];
      rhs[static_cast<std::size_t>(i)] =
          sum / chol[static_cast<std::size_t>(i) * kernel + i];
    }
  };

  std::vector<double> acc(static_cast<std::size_t>(t_len), 0.0);
  std::vector<double> cover(static_cast<std::size_t>(t_len), 0.0);
  std::vector<double> rhs(static_cast<std::size_t>(kernel));
  for (int frame = 0; frame < frames; ++frame) {
    const int offset = frame * stride;
    // z_k = W x_frame
    for (int a = 0; a < kernel; ++a) {
      double sum = 0.0;
      for (int f = 0; f < filters; ++f) {
        double zf = 0.0;
        for (int b = 0; b < kernel; ++b) {
          zf += static_cast<double>(encoder_weight.at(f, 0, b)) *
                static_cast<double>(x.at(0, offset + b));
        }
        sum += static_cast<double>(encoder_weight.at(f, 0, a)) * zf;
      }
      rhs[static_cast<std::size_t>(a)] = sum;
    }
    solve(rhs);
    for (int b = 0; b < kernel; ++b) {
      acc[static_cast<std::size_t>(offset + b)] += rhs[static_cast<std::size_t>(b)];
      cover[static_cast<std::size_t>(offset + b)] += 1.0;
    }
  }

  FrameDualResult<T> result;
  result.reconstruction = Tensor<T>({1, t_len});
  double err = 0.0, ref = 0.0;
  for (int i = 0; i < t_len; ++i) {
    const double v = acc[static_cast<std::size_t>(i)] /
                     std::max(cover[static_cast<std::size_t>(i)], 1.0);
    result.reconstruction.at(0, i) = static_cast<T>(v);
    const double d = v - static_cast<double>(x.at(0, i));
    err += d * d;
    ref += static_cast<double>(x.at(0, i)) * static_cast<double>(x.at(0, i));
  }
  result.relative_error = ref > 0.0 ? std::sqrt(err / ref) : std::sqrt(err);
  return result;
}

#define DTP_INSTANTIATE_MODEL(T)                                              \
  template struct Model<T>;                                                   \
  template Model<T> build<T>(const DTPNetConfig&, std::uint64_t);             \
  template Tensor<T> encode<T>(const Model<T>&, const Tensor<T>&);            \
  template Tensor<T> separate<T>(const Model<T>&, const Tensor<T>&);          \
  template SeparatorProbe<T> separate_with_taps<T>(const Model<T>&,           \
                                                   const Tensor<T>&);         \
  template Tensor<T> forward<T>(const Model<T>&, const Tensor<T>&);           \
  template Tensor<T> denoise_any_length<T>(const Model<T>&, const Tensor<T>&);\
  template ForwardGraph build_forward<T>(Tape<T>&, const Model<T>&,           \
                                         const Tensor<T>&, bool);             \
  template ForwardGraph build_forward_from_leaves<T>(                         \
      Tape<T>&, const DTPNetConfig&, const std::vector<int>&, int);           \
  template FrameDualResult<T> frame_dual_reconstruction<T>(                   \
      const Tensor<T>&, int, const Tensor<T>&);

DTP_INSTANTIATE_MODEL(float)
DTP_INSTANTIATE_MODEL(double)

#undef DTP_INSTANTIATE_MODEL

}  // namespace dtp
