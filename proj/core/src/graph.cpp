#include "dtpnet/graph.hpp"

#include <string>

namespace dtp {

template <typename T>
std::size_t Tape<T>::check(int id) const {
  if (id < 0 || id >= static_cast<int>(nodes_.size()))
    throw ShapeError("tape: invalid node id " + std::to_string(id));
  return static_cast<std::size_t>(id);
}

template <typename T>
int Tape<T>::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

template <typename T>
bool Tape<T>::any_requires(const std::vector<int>& ids) const {
  for (int id : ids) {
    if (nodes_[check(id)].requires_grad) return true;
  }
  return false;
}

template <typename T>
int Tape<T>::leaf(Tensor<T> value, bool requires_grad) {
  Node n;
  n.op = Op::Leaf;
  n.requires_grad = requires_grad;
  n.value = std::move(value);
  return push(std::move(n));
}

template <typename T>
int Tape<T>::conv1d(int input, int weight, const ConvSpec& spec) {
  Node n;
  n.op = Op::Conv1d;
  n.inputs = {input, weight};
  n.spec = spec;
  n.requires_grad = any_requires(n.inputs);
  n.value = dtp::conv1d(value(input), value(weight), spec);
  return push(std::move(n));
}

template <typename T>
int Tape<T>::conv_transpose1d(int input, int weight, int stride) {
  Node n;
  n.op = Op::ConvTranspose1d;
  n.inputs = {input, weight};
  n.stride = stride;
  n.requires_grad = any_requires(n.inputs);
  n.value = dtp::conv_transpose1d(value(input), value(weight), stride);
  return push(std::move(n));
}

template <typename T>
int Tape<T>::relu(int x) {
  Node n;
  n.op = Op::Relu;
  n.inputs = {x};
  n.requires_grad = any_requires(n.inputs);
  n.value = dtp::relu(value(x));
  return push(std::move(n));
}

template <typename T>
int Tape<T>::concat_channels(const std::vector<int>& parts) {
  Node n;
  n.op = Op::Concat;
  n.inputs = parts;
  n.requires_grad = any_requires(n.inputs);
  std::vector<const Tensor<T>*> ptrs;
  ptrs.reserve(parts.size());
  for (int id : parts) ptrs.push_back(&value(id));
  n.value = dtp::concat_channels(ptrs);
  return push(std::move(n));
}

template <typename T>
int Tape<T>::add(int a, int b) {
  Node n;
  n.op = Op::Add;
  n.inputs = {a, b};
  n.requires_grad = any_requires(n.inputs);
  n.value = dtp::add(value(a), value(b));
  return push(std::move(n));
}

template <typename T>
int Tape<T>::mse_loss(int prediction, int target) {
  Node n;
  n.op = Op::MseLoss;
  n.inputs = {prediction, target};
  n.requires_grad = any_requires(n.inputs);
  n.value = Tensor<T>({1});
  n.value.values[0] =
      static_cast<T>(dtp::mse_loss(value(prediction), value(target)));
  return push(std::move(n));
}

template <typename T>
void Tape<T>::backward(int root) {
  const Node& r = nodes_[check(root)];
  if (r.value.size() != 1)
    throw ShapeError("tape backward: root " + r.value.shape_str() +
                     " is not scalar; pass an upstream gradient");
  Tensor<T> seed(r.value.shape);
  seed.values[0] = T(1);
  backward(root, seed);
}

template <typename T>
void Tape<T>::backward(int root, const Tensor<T>& upstream) {
  Node& r = nodes_[check(root)];
  if (!upstream.same_shape(r.value))
    throw ShapeError("tape backward: upstream shape " + upstream.shape_str() +
                     " != root shape " + r.value.shape_str());

  // restrict the sweep to the root's ancestry
  std::vector<char> needed(nodes_.size(), 0);
  needed[static_cast<std::size_t>(root)] = 1;
  for (int id = root; id >= 0; --id) {
    if (!needed[static_cast<std::size_t>(id)]) continue;
    for (int in : nodes_[static_cast<std::size_t>(id)].inputs)
      needed[static_cast<std::size_t>(in)] = 1;
  }

  std::vector<Tensor<T>> local(nodes_.size());
  auto slot = [&](int id) -> Tensor<T>& {
    Tensor<T>& g = local[static_cast<std::size_t>(id)];
    if (g.size() == 0) g = Tensor<T>(nodes_[static_cast<std::size_t>(id)].value.shape);
    return g;
  };
  slot(root) = upstream;

  for (int id = root; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!needed[static_cast<std::size_t>(id)] || !n.requires_grad) continue;
    Tensor<T>& g = local[static_cast<std::size_t>(id)];
    if (g.size() == 0) continue;  // no gradient reached this node

    switch (n.op) {
      case Op::Leaf:
        break;
      case Op::Conv1d: {
        Node& in = nodes_[static_cast<std::size_t>(n.inputs[0])];
        Node& w = nodes_[static_cast<std::size_t>(n.inputs[1])];
        conv1d_backward(in.value, w.value, n.spec, g,
                        in.requires_grad ? &slot(n.inputs[0]) : nullptr,
                        w.requires_grad ? &slot(n.inputs[1]) : nullptr);
        break;
      }
      case Op::ConvTranspose1d: {
        Node& in = nodes_[static_cast<std::size_t>(n.inputs[0])];
        Node& w = nodes_[static_cast<std::size_t>(n.inputs[1])];
        conv_transpose1d_backward(
            in.value, w.value, n.stride, g,
            in.requires_grad ? &slot(n.inputs[0]) : nullptr,
            w.requires_grad ? &slot(n.inputs[1]) : nullptr);
        break;
      }
      case Op::Relu: {
        Node& in = nodes_[static_cast<std::size_t>(n.inputs[0])];
        if (in.requires_grad) relu_backward(in.value, g, &slot(n.inputs[0]));
        break;
      }
      case Op::Concat: {
        std::vector<Tensor<T>*> parts;
        parts.reserve(n.inputs.size());
        bool any = false;
        for (int pid : n.inputs) {
          parts.push_back(&slot(pid));
          any = any || nodes_[static_cast<std::size_t>(pid)].requires_grad;
        }
        if (any) concat_channels_backward(g, parts);
        break;
      }
      case Op::Add: {
        for (int which = 0; which < 2; ++which) {
          Node& in = nodes_[static_cast<std::size_t>(n.inputs[which])];
          if (!in.requires_grad) continue;
          Tensor<T>& gi = slot(n.inputs[which]);
          for (std::size_t i = 0; i < g.size(); ++i)
            gi.values[i] += g.values[i];
        }
        break;
      }
      case Op::MseLoss: {
        Node& p = nodes_[static_cast<std::size_t>(n.inputs[0])];
        Node& t = nodes_[static_cast<std::size_t>(n.inputs[1])];
        mse_loss_backward(p.value, t.value,
                          static_cast<double>(g.values[0]),
                          p.requires_grad ? &slot(n.inputs[0]) : nullptr,
                          t.requires_grad ? &slot(n.inputs[1]) : nullptr);
        break;
      }
    }
  }

  // fold this sweep into the persistent per-node gradients
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (local[i].size() == 0) continue;
    Node& n = nodes_[i];
    if (!n.requires_grad) continue;
    if (n.value_grad.size() == 0) {
      n.value_grad = std::move(local[i]);
    } else {
      for (std::size_t j = 0; j < n.value_grad.size(); ++j)
        n.value_grad.values[j] += local[i].values[j];
    }
  }
}

template <typename T>
void Tape<T>::reset_grads() {
  for (Node& n : nodes_) n.value_grad = Tensor<T>();
}

template class Tape<float>;
template class Tape<double>;

}  // namespace dtp
