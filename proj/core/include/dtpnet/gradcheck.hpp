#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "dtpnet/graph.hpp"

namespace dtp {

// Builds a graph on the tape from the given leaf ids (one per checked input,
// already added with requires_grad) and returns the root id. The builder may
// add its own constant leaves.
using GraphBuilder =
    std::function<int(Tape<double>&, const std::vector<int>&)>;

struct GradCheckReport {
  double max_rel_error = 0.0;
  bool finite = true;  // false if any probe produced non-finite values
  int worst_input = -1;
  std::size_t worst_coord = 0;
};

// Central differences (f(x+eps) - f(x-eps)) / 2 eps per coordinate against
// the analytic backward pass, in 64-bit. Non-scalar roots are reduced with a
// fixed random projection so backward runs under a generic upstream
// gradient. Relative error denominator: max(|analytic|, |numeric|, 1e-8).
GradCheckReport finite_difference_check(
    const GraphBuilder& builder, const std::vector<Tensor<double>>& inputs,
    double epsilon = 1e-5, std::uint64_t projection_seed = 0x5eed);

}  // namespace dtp
