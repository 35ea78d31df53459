#include "dtpnet/gradcheck.hpp"

#include <cmath>
#include <limits>

#include "dtpnet/rng.hpp"

namespace dtp {

GradCheckReport finite_difference_check(
    const GraphBuilder& builder, const std::vector<Tensor<double>>& inputs,
    double epsilon, std::uint64_t projection_seed) {
  if (epsilon < 1e-6 || epsilon > 1e-4)
    throw ConfigError("finite_difference_check: epsilon " +
                      std::to_string(epsilon) + " outside [1e-6, 1e-4]");

  auto evaluate = [&](const std::vector<Tensor<double>>& probe)
      -> std::pair<Tape<double>, std::pair<int, std::vector<int>>> {
    Tape<double> tape;
    std::vector<int> leaves;
    leaves.reserve(probe.size());
    for (const auto& t : probe) leaves.push_back(tape.leaf(t, true));
    const int root = builder(tape, leaves);
    return {std::move(tape), {root, std::move(leaves)}};
  };

  // analytic pass
  auto [tape, ids] = evaluate(inputs);
  const int root = ids.first;
  const std::vector<int>& leaves = ids.second;

  // non-scalar roots are projected through fixed random weights; the same
  // weights seed the backward pass, so backward runs under a generic
  // upstream gradient
  Tensor<double> projection;
  if (tape.value(root).size() != 1) {
    Rng rng(projection_seed);
    projection = Tensor<double>(tape.value(root).shape);
    for (auto& w : projection.values) w = rng.uniform(-1.0, 1.0);
    tape.backward(root, projection);
  } else {
    tape.backward(root);
  }

  std::vector<Tensor<double>> analytic;
  analytic.reserve(leaves.size());
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    const Tensor<double>& g = tape.grad(leaves[i]);
    analytic.push_back(g.size() ? g : Tensor<double>(inputs[i].shape));
  }

  // numeric slope of the projection: sum_j u_j (y+_j - y-_j) / 2 eps.
  // Differencing the outputs element-wise before projecting avoids the
  // cancellation of two large projected sums.
  auto slope = [&](const Tensor<double>& plus,
                   const Tensor<double>& minus) -> double {
    double s = 0.0;
    bool ok = true;
    for (std::size_t j = 0; j < plus.size(); ++j) {
      ok = ok && std::isfinite(plus.values[j]) &&
           std::isfinite(minus.values[j]);
      const double u = projection.size() ? projection.values[j] : 1.0;
      s += u * (plus.values[j] - minus.values[j]);
    }
    return ok ? s / (2.0 * epsilon)
              : std::numeric_limits<double>::quiet_NaN();
  };

  GradCheckReport report;
  std::vector<Tensor<double>> probe = inputs;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (std::size_t c = 0; c < inputs[i].size(); ++c) {
      const double saved = probe[i].values[c];

      probe[i].values[c] = saved + epsilon;
      auto up = evaluate(probe);
      probe[i].values[c] = saved - epsilon;
      auto down = evaluate(probe);
      probe[i].values[c] = saved;

      const double numeric = slope(up.first.value(up.second.first),
                                   down.first.value(down.second.first));
      const double exact = analytic[i].values[c];
      if (!std::isfinite(numeric) || !std::isfinite(exact))
        report.finite = false;
      const double denom =
          std::max({std::fabs(exact), std::fabs(numeric), 1e-8});
      const double rel = std::fabs(exact - numeric) / denom;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_input = static_cast<int>(i);
        report.worst_coord = c;
      }
    }
  }
  return report;
}

}  // namespace dtp
