#pragma once

#include <vector>

#include "dtpnet/ops.hpp"
#include "dtpnet/tensor.hpp"

namespace dtp {

// Reverse-mode tape over the primitive ops. Nodes only reference earlier
// nodes, so creation order is a topological order and a single reverse sweep
// computes exact gradients. Evaluation is eager: value(id) is available as
// soon as the node is created.
template <typename T>
class Tape {
 public:
  enum class Op { Leaf, Conv1d, ConvTranspose1d, Relu, Concat, Add, MseLoss };

  int leaf(Tensor<T> value, bool requires_grad = false);
  int conv1d(int input, int weight, const ConvSpec& spec);
  int conv_transpose1d(int input, int weight, int stride);
  int relu(int x);
  int concat_channels(const std::vector<int>& parts);
  int add(int a, int b);
  int mse_loss(int prediction, int target);  // scalar, shape [1]

  const Tensor<T>& value(int id) const { return nodes_[check(id)].value; }
  // valid after backward(); empty tensor for nodes no gradient reached
  const Tensor<T>& grad(int id) const { return nodes_[check(id)].value_grad; }

  // Seeds the root with 1 (scalar roots) or with an explicit upstream
  // gradient, then sweeps the tape once. Gradients accumulate across calls
  // until reset_grads().
  void backward(int root);
  void backward(int root, const Tensor<T>& upstream);
  void reset_grads();

  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    Op op = Op::Leaf;
    std::vector<int> inputs;
    ConvSpec spec;        // Conv1d
    int stride = 1;       // ConvTranspose1d
    bool requires_grad = false;
    Tensor<T> value;
    Tensor<T> value_grad;
  };

  std::size_t check(int id) const;
  int push(Node n);
  bool any_requires(const std::vector<int>& ids) const;

  std::vector<Node> nodes_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace dtp
