#pragma once

// Shared test-only helpers: independent oracles the implementation is checked
// against. None of these call into the forward/backward code paths they
// verify, except where a check is explicitly about the implementation's own
// reproducibility.

#include <cmath>
#include <vector>

#include "advrl/env.hpp"
#include "advrl/net.hpp"
#include "advrl/rng.hpp"

namespace advrl::testsupport {

// Central finite differences of an arbitrary scalar function over a mutable
// coordinate. Step 1e-3 per the gradient-check contract.
template <typename F>
double central_difference(double& coord, F&& loss, double h = 1e-3) {
  const double saved = coord;
  coord = saved + h;
  const double lp = loss();
  coord = saved - h;
  const double lm = loss();
  coord = saved;
  return (lp - lm) / (2.0 * h);
}

// Gradient comparison rule: relative error <= 1e-4 wherever the gradient is
// measurable, with a small absolute floor for near-zero entries where the
// finite-difference signal is below measurement noise.
inline bool grads_match(double analytic, double numeric, double rel_tol = 1e-4,
                        double abs_floor = 1e-6) {
  const double diff = std::fabs(analytic - numeric);
  if (diff <= abs_floor) return true;
  return diff <= rel_tol * std::max(std::fabs(analytic), std::fabs(numeric));
}

// Plain-loop reference evaluation of a LayerStack, written independently of
// forward(): separate traversal, separate indexing arithmetic.
std::vector<double> reference_forward(const LayerStack& net, const Tensor& input);

// Random network + in-range input generation for randomized suites. Nets are
// regenerated until every ReLU pre-activation is at least `margin` away from
// its kink so finite differences stay on one linear piece.
struct RandomNetCase {
  LayerStack net;
  Tensor input;
};
RandomNetCase random_conv_dense_case(std::uint64_t seed, double kink_margin = 2e-2);

// Exact Q* of a TabularMdp by value iteration on its exposed tables.
// Terminal states carry Q = 0 by convention.
std::vector<double> value_iteration_q(const TabularMdp::Tables& tables, double gamma,
                                      double tol = 1e-12, int max_sweeps = 100000);

}  // namespace advrl::testsupport
