#pragma once

#include <string>
#include <vector>

#include "advrl/tensor.hpp"

namespace advrl {

enum class OptimizerKind { Sgd, Adam };

OptimizerKind optimizer_kind_from_string(const std::string& s);
std::string to_string(OptimizerKind k);

// Plain SGD or Adam over a parameter list. Adam state (m, v) is allocated
// lazily on the first step so the optimizer can be constructed before the
// network it drives.
struct Optimizer {
  OptimizerKind kind = OptimizerKind::Adam;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step_count = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;

  static Optimizer sgd(double lr);
  static Optimizer adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  // In-place update; throws on non-finite gradients.
  void step(std::vector<Tensor>& params, const std::vector<Tensor>& grads);
};

}  // namespace advrl
