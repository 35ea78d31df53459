#pragma once

#include <vector>

#include "dtpnet/rng.hpp"
#include "dtpnet/tensor.hpp"

namespace dtptest {

template <typename T>
dtp::Tensor<T> random_tensor(std::vector<int> shape, dtp::Rng& rng,
                             double lo = -1.0, double hi = 1.0) {
  dtp::Tensor<T> t(std::move(shape));
  for (auto& v : t.values) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

// values bounded away from zero, for relu kink avoidance
template <typename T>
dtp::Tensor<T> random_tensor_away_from_zero(std::vector<int> shape,
                                            dtp::Rng& rng,
                                            double margin = 0.1) {
  dtp::Tensor<T> t(std::move(shape));
  for (auto& v : t.values) {
    const double mag = margin + rng.uniform(0.0, 1.0);
    v = static_cast<T>(rng.uniform() < 0.5 ? -mag : mag);
  }
  return t;
}

inline bool bit_equal(const std::vector<float>& a,
                      const std::vector<float>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

}  // namespace dtptest
