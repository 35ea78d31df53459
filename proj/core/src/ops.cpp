#include "dtpnet/ops.hpp"

#include <algorithm>
#include <cmath>

namespace dtp {

void ConvSpec::validate() const {
  if (in_channels < 1)
    throw ShapeError("conv: in_channels " + std::to_string(in_channels));
  if (out_channels < 1)
    throw ShapeError("conv: out_channels " + std::to_string(out_channels));
  if (kernel < 1) throw ShapeError("conv: kernel " + std::to_string(kernel));
  if (stride < 1) throw ShapeError("conv: stride " + std::to_string(stride));
  if (dilation < 1)
    throw ShapeError("conv: dilation " + std::to_string(dilation));
  if (pad_left < 0 || pad_right < 0)
    throw ShapeError("conv: negative padding");
}

int ConvSpec::output_length(int input_length) const {
  const long long span = static_cast<long long>(input_length) + pad_left +
                         pad_right -
                         static_cast<long long>(dilation) * (kernel - 1) - 1;
  if (span < 0) return 0;
  return static_cast<int>(span / stride) + 1;
}

namespace {

// Output positions t for which t*stride + offset lands inside [0, limit).
// Returns [t_begin, t_end) clipped to [0, t_max).
inline std::pair<int, int> valid_range(int offset, int stride, int limit,
                                       int t_max) {
  int begin = 0;
  if (offset < 0) begin = (-offset + stride - 1) / stride;
  int end = t_max;
  if (offset < limit) {
    const int last = (limit - 1 - offset) / stride;  // last valid t
    end = std::min(end, last + 1);
  } else {
    end = 0;
  }
  begin = std::min(begin, t_max);
  return {begin, std::max(begin, end)};
}

template <typename T>
void check_conv1d_shapes(const Tensor<T>& input, const Tensor<T>& weight,
                         const ConvSpec& spec) {
  spec.validate();
  if (input.rank() != 2)
    throw ShapeError("conv1d: input rank " + std::to_string(input.rank()) +
                     ", want [C_in x K_in]");
  if (weight.rank() != 3)
    throw ShapeError("conv1d: weight rank " + std::to_string(weight.rank()) +
                     ", want [C_out x C_in x kernel]");
  if (input.dim(0) != spec.in_channels)
    throw ShapeError("conv1d: input channels " + std::to_string(input.dim(0)) +
                     " != spec.in_channels " + std::to_string(spec.in_channels));
  if (weight.dim(0) != spec.out_channels)
    throw ShapeError("conv1d: weight out channels " +
                     std::to_string(weight.dim(0)) + " != spec.out_channels " +
                     std::to_string(spec.out_channels));
  if (weight.dim(1) != spec.in_channels)
    throw ShapeError("conv1d: weight in channels " +
                     std::to_string(weight.dim(1)) + " != spec.in_channels " +
                     std::to_string(spec.in_channels));
  if (weight.dim(2) != spec.kernel)
    throw ShapeError("conv1d: weight kernel " + std::to_string(weight.dim(2)) +
                     " != spec.kernel " + std::to_string(spec.kernel));
  if (spec.output_length(input.dim(1)) <= 0)
    throw ShapeError("conv1d: output length " +
                     std::to_string(spec.output_length(input.dim(1))) +
                     " for input length " + std::to_string(input.dim(1)));
}

}  // namespace

template <typename T>
Tensor<T> conv1d(const Tensor<T>& input, const Tensor<T>& weight,
                 const ConvSpec& spec) {
  check_conv1d_shapes(input, weight, spec);
  const int k_in = input.dim(1);
  const int k_out = spec.output_length(k_in);
  Tensor<T> out({spec.out_channels, k_out});

  std::vector<double> acc(static_cast<std::size_t>(k_out));
  for (int oc = 0; oc < spec.out_channels; ++oc) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int ic = 0; ic < spec.in_channels; ++ic) {
      const T* x = input.row(ic);
      const T* w = &weight.at(oc, ic, 0);
      for (int k = 0; k < spec.kernel; ++k) {
        const double wk = static_cast<double>(w[k]);
        if (wk == 0.0) continue;
        const int off = k * spec.dilation - spec.pad_left;
        const auto [t0, t1] = valid_range(off, spec.stride, k_in, k_out);
        const T* xk = x + off;
        for (int t = t0; t < t1; ++t) {
          acc[static_cast<std::size_t>(t)] +=
              wk * static_cast<double>(xk[t * spec.stride]);
        }
      }
    }
    T* o = out.row(oc);
    for (int t = 0; t < k_out; ++t)
      o[t] = static_cast<T>(acc[static_cast<std::size_t>(t)]);
  }
  return out;
}

template <typename T>
void conv1d_backward(const Tensor<T>& input, const Tensor<T>& weight,
                     const ConvSpec& spec, const Tensor<T>& grad_out,
                     Tensor<T>* grad_input, Tensor<T>* grad_weight) {
  check_conv1d_shapes(input, weight, spec);
  const int k_in = input.dim(1);
  const int k_out = spec.output_length(k_in);
  if (grad_out.rank() != 2 || grad_out.dim(0) != spec.out_channels ||
      grad_out.dim(1) != k_out) {
    throw ShapeError("conv1d backward: upstream shape " + grad_out.shape_str() +
                     ", want [" + std::to_string(spec.out_channels) + "x" +
                     std::to_string(k_out) + "]");
  }

  // accumulate in double, flush once
  std::vector<double> acc_in;
  if (grad_input) acc_in.assign(input.size(), 0.0);

  for (int oc = 0; oc < spec.out_channels; ++oc) {
    const T* g = grad_out.row(oc);
    for (int ic = 0; ic < spec.in_channels; ++ic) {
      const T* x = input.row(ic);
      const T* w = &weight.at(oc, ic, 0);
      T* gw = grad_weight ? &grad_weight->at(oc, ic, 0) : nullptr;
      double* gi = grad_input
                       ? acc_in.data() + static_cast<std::size_t>(ic) * k_in
                       : nullptr;
      for (int k = 0; k < spec.kernel; ++k) {
        const int off = k * spec.dilation - spec.pad_left;
        const auto [t0, t1] = valid_range(off, spec.stride, k_in, k_out);
        if (gw) {
          double sum = 0.0;
          const T* xk = x + off;
          for (int t = t0; t < t1; ++t) {
            sum += static_cast<double>(g[t]) *
                   static_cast<double>(xk[t * spec.stride]);
          }
          gw[k] = static_cast<T>(static_cast<double>(gw[k]) + sum);
        }
        if (gi) {
          const double wk = static_cast<double>(w[k]);
          if (wk == 0.0) continue;
          double* gik = gi + off;
          for (int t = t0; t < t1; ++t) {
            gik[t * spec.stride] += wk * static_cast<double>(g[t]);
          }
        }
      }
    }
  }
  if (grad_input) {
    for (std::size_t i = 0; i < acc_in.size(); ++i) {
      grad_input->values[i] = static_cast<T>(
          static_cast<double>(grad_input->values[i]) + acc_in[i]);
    }
  }
}

namespace {

template <typename T>
void check_transpose_shapes(const Tensor<T>& input, const Tensor<T>& weight,
                            int stride) {
  if (stride < 1)
    throw ShapeError("conv_transpose1d: stride " + std::to_string(stride));
  if (input.rank() != 2)
    throw ShapeError("conv_transpose1d: input rank " +
                     std::to_string(input.rank()) + ", want [C_in x K]");
  if (weight.rank() != 3)
    throw ShapeError("conv_transpose1d: weight rank " +
                     std::to_string(weight.rank()) +
                     ", want [C_in x C_out x L]");
  if (input.dim(0) != weight.dim(0))
    throw ShapeError("conv_transpose1d: input channels " +
                     std::to_string(input.dim(0)) + " != weight in channels " +
                     std::to_string(weight.dim(0)));
}

}  // namespace

template <typename T>
Tensor<T> conv_transpose1d(const Tensor<T>& input, const Tensor<T>& weight,
                           int stride) {
  check_transpose_shapes(input, weight, stride);
  const int frames = input.dim(1);
  const int c_out = weight.dim(1);
  const int kernel = weight.dim(2);
  const int t_out = (frames - 1) * stride + kernel;

  Tensor<T> out({c_out, t_out});
  std::vector<double> acc(static_cast<std::size_t>(t_out));
  for (int oc = 0; oc < c_out; ++oc) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int ic = 0; ic < input.dim(0); ++ic) {
      const T* z = input.row(ic);
      const T* w = &weight.at(ic, oc, 0);
      for (int f = 0; f < frames; ++f) {
        const double zf = static_cast<double>(z[f]);
        if (zf == 0.0) continue;
        double* dst = acc.data() + static_cast<std::size_t>(f) * stride;
        for (int l = 0; l < kernel; ++l) dst[l] += zf * static_cast<double>(w[l]);
      }
    }
    T* o = out.row(oc);
    for (int t = 0; t < t_out; ++t)
      o[t] = static_cast<T>(acc[static_cast<std::size_t>(t)]);
  }
  return out;
}

template <typename T>
void conv_transpose1d_backward(const Tensor<T>& input, const Tensor<T>& weight,
                               int stride, const Tensor<T>& grad_out,
                               Tensor<T>* grad_input, Tensor<T>* grad_weight) {
  check_transpose_shapes(input, weight, stride);
  const int frames = input.dim(1);
  const int c_out = weight.dim(1);
  const int kernel = weight.dim(2);
  const int t_out = (frames - 1) * stride + kernel;
  if (grad_out.rank() != 2 || grad_out.dim(0) != c_out ||
      grad_out.dim(1) != t_out) {
    throw ShapeError("conv_transpose1d backward: upstream shape " +
                     grad_out.shape_str() + ", want [" + std::to_string(c_out) +
                     "x" + std::to_string(t_out) + "]");
  }

  std::vector<double> acc_in;
  if (grad_input) acc_in.assign(input.size(), 0.0);
  std::vector<double> acc_w(static_cast<std::size_t>(kernel));

  for (int ic = 0; ic < input.dim(0); ++ic) {
    const T* z = input.row(ic);
    double* gi = grad_input
                     ? acc_in.data() + static_cast<std::size_t>(ic) * frames
                     : nullptr;
    for (int oc = 0; oc < c_out; ++oc) {
      const T* g = grad_out.row(oc);
      const T* w = &weight.at(ic, oc, 0);
      std::fill(acc_w.begin(), acc_w.end(), 0.0);
      for (int f = 0; f < frames; ++f) {
        const T* gf = g + static_cast<std::size_t>(f) * stride;
        if (gi) {
          double sum = 0.0;
          for (int l = 0; l < kernel; ++l)
            sum += static_cast<double>(gf[l]) * static_cast<double>(w[l]);
          gi[f] += sum;
        }
        if (grad_weight) {
          const double zf = static_cast<double>(z[f]);
          if (zf == 0.0) continue;
          for (int l = 0; l < kernel; ++l)
            acc_w[static_cast<std::size_t>(l)] +=
                zf * static_cast<double>(gf[l]);
        }
      }
      if (grad_weight) {
        T* gw = &grad_weight->at(ic, oc, 0);
        for (int l = 0; l < kernel; ++l) {
          gw[l] = static_cast<T>(static_cast<double>(gw[l]) +
                                 acc_w[static_cast<std::size_t>(l)]);
        }
      }
    }
  }
  if (grad_input) {
    for (std::size_t i = 0; i < acc_in.size(); ++i) {
      grad_input->values[i] = static_cast<T>(
          static_cast<double>(grad_input->values[i]) + acc_in[i]);
    }
  }
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> out(x.shape);
  for (std::size_t i = 0; i < x.size(); ++i)
    out.values[i] = x.values[i] > T(0) ? x.values[i] : T(0);
  return out;
}

template <typename T>
void relu_backward(const Tensor<T>& x, const Tensor<T>& grad_out,
                   Tensor<T>* grad_x) {
  if (!x.same_shape(grad_out))
    throw ShapeError("relu backward: upstream shape " + grad_out.shape_str() +
                     " != input shape " + x.shape_str());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x.values[i] > T(0)) grad_x->values[i] += grad_out.values[i];
  }
}

template <typename T>
Tensor<T> concat_channels(const std::vector<const Tensor<T>*>& parts) {
  if (parts.empty()) throw ShapeError("concat_channels: no parts");
  const int k = parts[0]->dim(parts[0]->rank() - 1);
  int channels = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const Tensor<T>* p = parts[i];
    if (p->rank() != 2)
      throw ShapeError("concat_channels: part " + std::to_string(i) +
                       " rank " + std::to_string(p->rank()));
    if (p->dim(1) != k)
      throw ShapeError("concat_channels: part " + std::to_string(i) +
                       " length " + std::to_string(p->dim(1)) + " != " +
                       std::to_string(k));
    channels += p->dim(0);
  }
  Tensor<T> out({channels, k});
  T* dst = out.data();
  for (const Tensor<T>* p : parts) {
    std::copy(p->values.begin(), p->values.end(), dst);
    dst += p->size();
  }
  return out;
}

template <typename T>
void concat_channels_backward(const Tensor<T>& grad_out,
                              const std::vector<Tensor<T>*>& grad_parts) {
  const T* src = grad_out.data();
  for (Tensor<T>* g : grad_parts) {
    for (std::size_t i = 0; i < g->size(); ++i) g->values[i] += src[i];
    src += g->size();
  }
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  if (!a.same_shape(b))
    throw ShapeError("add: shape " + a.shape_str() + " != " + b.shape_str());
  Tensor<T> out(a.shape);
  for (std::size_t i = 0; i < a.size(); ++i)
    out.values[i] = a.values[i] + b.values[i];
  return out;
}

template <typename T>
double mse_loss(const Tensor<T>& prediction, const Tensor<T>& target) {
  if (!prediction.same_shape(target))
    throw ShapeError("mse_loss: shape " + prediction.shape_str() + " != " +
                     target.shape_str());
  if (prediction.size() == 0) throw ShapeError("mse_loss: empty tensors");
  double sum = 0.0;
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    const double d = static_cast<double>(prediction.values[i]) -
                     static_cast<double>(target.values[i]);
    sum += d * d;
  }
  return sum / static_cast<double>(prediction.size());
}

template <typename T>
void mse_loss_backward(const Tensor<T>& prediction, const Tensor<T>& target,
                       double upstream, Tensor<T>* grad_prediction,
                       Tensor<T>* grad_target) {
  if (!prediction.same_shape(target))
    throw ShapeError("mse_loss backward: shape " + prediction.shape_str() +
                     " != " + target.shape_str());
  const double scale = 2.0 * upstream / static_cast<double>(prediction.size());
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    const double d = scale * (static_cast<double>(prediction.values[i]) -
                              static_cast<double>(target.values[i]));
    if (grad_prediction) {
      grad_prediction->values[i] =
          static_cast<T>(static_cast<double>(grad_prediction->values[i]) + d);
    }
    if (grad_target) {
      grad_target->values[i] =
          static_cast<T>(static_cast<double>(grad_target->values[i]) - d);
    }
  }
}

#define DTP_INSTANTIATE_OPS(T)                                                 \
  template Tensor<T> conv1d<T>(const Tensor<T>&, const Tensor<T>&,            \
                               const ConvSpec&);                               \
  template void conv1d_backward<T>(const Tensor<T>&, const Tensor<T>&,        \
                                   const ConvSpec&, const Tensor<T>&,         \
                                   Tensor<T>*, Tensor<T>*);                   \
  template Tensor<T> conv_transpose1d<T>(const Tensor<T>&, const Tensor<T>&,  \
                                         int);                                \
  template void conv_transpose1d_backward<T>(const Tensor<T>&,                \
                                             const Tensor<T>&, int,           \
                                             const Tensor<T>&, Tensor<T>*,    \
                                             Tensor<T>*);                     \
  template Tensor<T> relu<T>(const Tensor<T>&);                               \
  template void relu_backward<T>(const Tensor<T>&, const Tensor<T>&,          \
                                 Tensor<T>*);                                 \
  template Tensor<T> concat_channels<T>(const std::vector<const Tensor<T>*>&);\
  template void concat_channels_backward<T>(const Tensor<T>&,                 \
                                            const std::vector<Tensor<T>*>&);  \
  template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);              \
  template double mse_loss<T>(const Tensor<T>&, const Tensor<T>&);            \
  template void mse_loss_backward<T>(const Tensor<T>&, const Tensor<T>&,      \
                                     double, Tensor<T>*, Tensor<T>*);

DTP_INSTANTIATE_OPS(float)
DTP_INSTANTIATE_OPS(double)

#undef DTP_INSTANTIATE_OPS

}  // namespace dtp
