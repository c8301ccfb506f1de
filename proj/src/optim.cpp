#include "advrl/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace advrl {

OptimizerKind optimizer_kind_from_string(const std::string& s) {
  if (s == "sgd") return OptimizerKind::Sgd;
  if (s == "adam") return OptimizerKind::Adam;
  throw std::invalid_argument("unknown optimizer: " + s);
}

std::string to_string(OptimizerKind k) { return k == OptimizerKind::Sgd ? "sgd" : "adam"; }

Optimizer Optimizer::sgd(double lr) {
  Optimizer o;
  o.kind = OptimizerKind::Sgd;
  o.learning_rate = lr;
  return o;
}

Optimizer Optimizer::adam(double lr, double beta1, double beta2, double eps) {
  Optimizer o;
  o.kind = OptimizerKind::Adam;
  o.learning_rate = lr;
  o.beta1 = beta1;
  o.beta2 = beta2;
  o.eps = eps;
  return o;
}

void Optimizer::step(std::vector<Tensor>& params, const std::vector<Tensor>& grads) {
  if (params.size() != grads.size())
    throw std::invalid_argument("optimizer step: parameter/gradient count mismatch");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!params[i].same_shape(grads[i]))
      throw std::invalid_argument("optimizer step: gradient shape mismatch");
    check_finite(grads[i], "gradient");
  }

  if (kind == OptimizerKind::Sgd) {
    ++step_count;
    for (std::size_t i = 0; i < params.size(); ++i)
      for (std::size_t j = 0; j < params[i].data.size(); ++j)
        params[i].data[j] -= learning_rate * grads[i].data[j];
    return;
  }

  if (m.empty()) {
    for (const auto& p : params) {
      m.push_back(Tensor::zeros(p.shape));
      v.push_back(Tensor::zeros(p.shape));
    }
  }
  ++step_count;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (std::size_t j = 0; j < params[i].data.size(); ++j) {
      const double g = grads[i].data[j];
      double& mj = m[i].data[j];
      double& vj = v[i].data[j];
      mj = beta1 * mj + (1.0 - beta1) * g;
      vj = beta2 * vj + (1.0 - beta2) * g * g;
      const double mhat = mj / bc1;
      const double vhat = vj / bc2;
      params[i].data[j] -= learning_rate * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

}  // namespace advrl
