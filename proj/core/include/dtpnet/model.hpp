#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dtpnet/graph.hpp"
#include "dtpnet/tensor.hpp"

namespace dtp {

enum class Connectivity { Dense, Residual, None };
enum class DilationMode { Pyramid, Flat };
enum class DenseScope { Global, PerPyramid };

// Architecture description. JSON keys follow the canonical hyperparameter
// names: N, L, H, P, M, R, B, connectivity, dilation_mode, activation, plus
// optional stride (defaults to L/2, or (L-1)/2 when L is odd) and
// dense_scope.
struct DTPNetConfig {
  int encoder_filters = 64;     // N
  int encoder_kernel = 16;      // L
  int conv_channels = 32;       // H, dilated-conv channels in each block
  int conv_kernel = 3;          // P
  int blocks_per_pyramid = 4;   // M
  int pyramid_repeats = 2;      // R
  int growth_channels = 0;      // B; 0 -> ceil(H/2)
  Connectivity connectivity = Connectivity::Dense;
  DilationMode dilation_mode = DilationMode::Pyramid;
  std::string activation = "relu";
  int stride_override = 0;      // 0 -> derived from L
  DenseScope dense_scope = DenseScope::Global;

  int stride() const;
  int growth() const;  // effective B
  int num_blocks() const { return blocks_per_pyramid * pyramid_repeats; }
  int dilation_of(int block) const;        // 2^(block mod M) or 1
  int block_input_channels(int block) const;
  int block_output_channels() const;       // B; N under residual wiring
  int merge_input_channels() const;
  void validate() const;
};

DTPNetConfig config_from_json(const std::string& text);  // unknown keys rejected
std::string config_to_json(const DTPNetConfig& config);

enum class AblationVariant { Basenet, Tpb, Dense, TpbDense, TpbRes };

AblationVariant variant_from_name(const std::string& name);
const char* variant_name(AblationVariant variant);
constexpr AblationVariant kAllVariants[] = {
    AblationVariant::Basenet, AblationVariant::Tpb, AblationVariant::Dense,
    AblationVariant::TpbDense, AblationVariant::TpbRes};

// basenet: none+flat; tpb: none+pyramid; dense: dense+flat;
// tpb_dense: dense+pyramid; tpb_res: residual+pyramid.
DTPNetConfig ablation_variant(AblationVariant variant, DTPNetConfig base);

template <typename T>
struct Model {
  struct Block {
    int dilation = 1;
    Tensor<T> bottleneck;  // B x C_in x 1
    Tensor<T> dilated;     // H x B x P
    Tensor<T> out;         // B_out x H x 1
  };

  DTPNetConfig config;
  Tensor<T> encoder_weight;  // N x 1 x L
  std::vector<Block> blocks;
  Tensor<T> merge_weight;    // N x merge_in x 1
  Tensor<T> decoder_weight;  // N x 1 x L (transposed-conv kernel)

  // fixed traversal order shared by the optimizer and the checkpoint format
  std::vector<std::pair<std::string, Tensor<T>*>> named_params();
  std::vector<std::pair<std::string, const Tensor<T>*>> named_params() const;
};

// Weights drawn from uniform(-b, b) with b = sqrt(6/(fan_in + fan_out)),
// reproducible from the seed.
template <typename T>
Model<T> build(const DTPNetConfig& config, std::uint64_t seed);

template <typename T>
Tensor<T> encode(const Model<T>& model, const Tensor<T>& x);

template <typename T>
Tensor<T> separate(const Model<T>& model, const Tensor<T>& z);

// separate() plus the per-block input/output values, for the probes
template <typename T>
struct SeparatorProbe {
  std::vector<Tensor<T>> block_inputs;
  std::vector<Tensor<T>> block_outputs;
  Tensor<T> separated;
};

template <typename T>
SeparatorProbe<T> separate_with_taps(const Model<T>& model,
                                     const Tensor<T>& z);

template <typename T>
Tensor<T> forward(const Model<T>& model, const Tensor<T>& x);

// Right-pads with zeros to the next stride multiple, runs forward, trims.
template <typename T>
Tensor<T> denoise_any_length(const Model<T>& model, const Tensor<T>& x);

// Tape nodes of one forward pass; weights line up with named_params order.
struct ForwardGraph {
  int input = -1;
  std::vector<int> weights;
  std::vector<int> block_inputs;   // concatenated input fed to each block
  std::vector<int> block_outputs;
  int encoded = -1;
  int separated = -1;
  int output = -1;
};

template <typename T>
ForwardGraph build_forward(Tape<T>& tape, const Model<T>& model,
                           const Tensor<T>& x, bool weights_require_grad);

// Same graph over pre-created leaves (named_params order plus the input),
// so gradient checks can probe the weight leaves directly.
template <typename T>
ForwardGraph build_forward_from_leaves(Tape<T>& tape,
                                       const DTPNetConfig& config,
                                       const std::vector<int>& weight_leaves,
                                       int input_leaf);

std::int64_t param_count(const DTPNetConfig& config);

// 2 * multiply-accumulates of every convolution for one length-T pass
std::int64_t flops_estimate(const DTPNetConfig& config, int input_length);

// Least-squares inversion of the encoder filter bank applied per frame,
// then overlap-add divided by the per-sample cover count. Requires N >= L
// and numerically full column rank.
template <typename T>
struct FrameDualResult {
  Tensor<T> reconstruction;  // 1 x T
  double relative_error = 0.0;
};

template <typename T>
FrameDualResult<T> frame_dual_reconstruction(const Tensor<T>& encoder_weight,
                                             int stride, const Tensor<T>& x);

}  // namespace dtp
