#include "advrl/baselines.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

namespace advrl {

std::string strategy_label(const TimingStrategy& s) {
  char buf[64];
  if (const auto* u = std::get_if<Uniform>(&s)) {
    std::snprintf(buf, sizeof(buf), "uniform(p=%.3g)", u->p);
    return buf;
  }
  if (const auto* st = std::get_if<StrategicallyTimed>(&s)) {
    std::snprintf(buf, sizeof(buf), "strategic(th=%.3g)", st->threshold);
    return buf;
  }
  return "learned";
}

double attack_score(const LayerStack& net, const Tensor& s) {
  const Tensor q = forward(net, s);
  const std::vector<double> phi = softmax(q.data);
  const auto [mn, mx] = std::minmax_element(phi.begin(), phi.end());
  return *mx - *mn;
}

double policy_score(const LayerStack& net, const Tensor& s) { return attack_score(net, s); }

double q_variance(const LayerStack& net, const Tensor& s) {
  const Tensor q = forward(net, s);
  const int n = q.numel();
  if (n < 2) throw std::invalid_argument("q_variance: needs at least two actions");
  double mean = 0.0;
  for (double v : q.data) mean += v;
  mean /= n;
  double acc = 0.0;
  for (double v : q.data) acc += (v - mean) * (v - mean);
  return acc / (n - 1);
}

bool decide(const TimingStrategy& strategy, const LayerStack& net, const Tensor& s, Rng& rng) {
  if (const auto* u = std::get_if<Uniform>(&strategy)) {
    if (u->p < 0.0 || u->p > 1.0) throw std::invalid_argument("uniform strategy: p outside [0,1]");
    return rng.uniform() < u->p;
  }
  if (const auto* st = std::get_if<StrategicallyTimed>(&strategy))
    return attack_score(net, s) > st->threshold;
  const auto& learned = std::get<LearnedAttacker>(strategy);
  if (!learned.policy) throw std::invalid_argument("learned strategy: missing policy network");
  return argmax(forward(*learned.policy, s)) == 1;
}

}  // namespace advrl
