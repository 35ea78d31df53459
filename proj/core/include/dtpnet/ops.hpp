#pragma once

#include <vector>

#include "dtpnet/tensor.hpp"

namespace dtp {

struct ConvSpec {
  int in_channels = 1;
  int out_channels = 1;
  int kernel = 1;
  int stride = 1;
  int dilation = 1;
  int pad_left = 0;
  int pad_right = 0;

  void validate() const;
  // floor((K_in + pad_left + pad_right - dilation*(kernel-1) - 1)/stride) + 1
  int output_length(int input_length) const;
};

// All convolutions are bias-free cross-correlations with zero padding.
// Partial sums accumulate in double even for float tensors. Backward
// functions add into the given grad buffers, which must be pre-shaped.

// input [C_in x K_in], weight [C_out x C_in x kernel] -> [C_out x K_out]
template <typename T>
Tensor<T> conv1d(const Tensor<T>& input, const Tensor<T>& weight,
                 const ConvSpec& spec);

template <typename T>
void conv1d_backward(const Tensor<T>& input, const Tensor<T>& weight,
                     const ConvSpec& spec, const Tensor<T>& grad_out,
                     Tensor<T>* grad_input, Tensor<T>* grad_weight);

// input [C_in x K], weight [C_in x C_out x L] -> [C_out x ((K-1)*stride + L)]
template <typename T>
Tensor<T> conv_transpose1d(const Tensor<T>& input, const Tensor<T>& weight,
                           int stride);

template <typename T>
void conv_transpose1d_backward(const Tensor<T>& input, const Tensor<T>& weight,
                               int stride, const Tensor<T>& grad_out,
                               Tensor<T>* grad_input, Tensor<T>* grad_weight);

template <typename T>
Tensor<T> relu(const Tensor<T>& x);

template <typename T>
void relu_backward(const Tensor<T>& x, const Tensor<T>& grad_out,
                   Tensor<T>* grad_x);

// parts share the time length; channels stack in argument order
template <typename T>
Tensor<T> concat_channels(const std::vector<const Tensor<T>*>& parts);

template <typename T>
void concat_channels_backward(const Tensor<T>& grad_out,
                              const std::vector<Tensor<T>*>& grad_parts);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
double mse_loss(const Tensor<T>& prediction, const Tensor<T>& target);

// d(mse)/d(prediction) = 2 (p - t)/n * upstream; target gets the negative
template <typename T>
void mse_loss_backward(const Tensor<T>& prediction, const Tensor<T>& target,
                       double upstream, Tensor<T>* grad_prediction,
                       Tensor<T>* grad_target);

}  // namespace dtp
